//! Maximum likelihood for the binary regression model
//! `logit P(Y=1 | X) = h(beta; X, mu)` and the plug-in classifier.
//!
//! Writing `beta = exp_mu(b)` turns `h(beta; x_i, mu)` into `<z_i, b>` with `z_i`
//! the frame coordinates of `log_mu x_i`, so fitting `beta` with `mu` fixed is a
//! concave no-intercept logistic regression on the `z_i`. That problem is solved
//! by damped Newton iterations in [`LogisticProblem`].

use nalgebra::{DMatrix, DVector};

use crate::error::{GeoError, Result};
use crate::frechet::{frechet_mean, FrechetResult, FrechetSolveOptions};
use crate::metric::{alexandrov_inner_product, norm, GeodesicSpace, Point, SpaceId, TangentVector};

/// Relative tolerance for comparing objective values in line searches. Near an
/// optimum the change per step falls below the rounding error of the summed
/// objective, and a strict comparison would stall the iteration.
pub const ROUNDING_SLACK: f64 = 1e-13;

/// Paired covariates and binary labels from one space.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    space: SpaceId,
    points: Vec<Point>,
    labels: Vec<bool>,
}

impl Dataset {
    pub fn new(space: SpaceId, points: Vec<Point>, labels: Vec<bool>) -> Result<Self> {
        if points.is_empty() {
            return Err(GeoError::Empty("dataset"));
        }
        if points.len() != labels.len() {
            return Err(GeoError::DimensionMismatch {
                expected: points.len(),
                got: labels.len(),
            });
        }
        if let Some(p) = points.iter().find(|p| p.space_id() != &space) {
            return Err(GeoError::SpaceMismatch {
                expected: space.to_string(),
                found: p.space_id().to_string(),
            });
        }
        Ok(Dataset {
            space,
            points,
            labels,
        })
    }

    pub fn space_id(&self) -> &SpaceId {
        &self.space
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Rows at the given indices, in that order.
    pub fn subset(&self, idx: &[usize]) -> Result<Dataset> {
        Dataset::new(
            self.space.clone(),
            idx.iter().map(|&i| self.points[i].clone()).collect(),
            idx.iter().map(|&i| self.labels[i]).collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub max_iters: usize,
    /// Threshold on the norm of the likelihood gradient in `b`.
    pub grad_tol: f64,
    /// Tangent norm of `b` beyond which a non-converged fit counts as separated.
    pub separation_threshold: f64,
    /// Use this point instead of the sample Fréchet mean.
    pub mu_override: Option<Point>,
    pub frechet: FrechetSolveOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iters: 100,
            grad_tol: 1e-10,
            separation_threshold: 1e3,
            mu_override: None,
            frechet: FrechetSolveOptions::default(),
        }
    }
}

impl FitOptions {
    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || !(self.grad_tol > 0.0) || !(self.separation_threshold > 0.0) {
            return Err(GeoError::InvalidConfig(
                "max_iters, grad_tol and separation_threshold must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub mu_hat: Point,
    pub beta_hat: Point,
    /// `log_{mu_hat} beta_hat` in frame coordinates.
    pub b_hat: TangentVector,
    /// Mean log-likelihood at the returned coefficients.
    pub loglik: f64,
    pub grad_norm: f64,
    pub iters: usize,
    pub converged: bool,
    pub separated: bool,
    /// Set when `exp_{mu_hat}(b_hat)` had to be projected back into the space,
    /// so `beta_hat` no longer reproduces `b_hat` exactly.
    pub beta_projected: bool,
    /// Diagnostics of the mean estimate, absent when `mu_override` was given.
    pub frechet: Option<FrechetResult>,
}

impl FitResult {
    /// `d(mu_hat, beta_hat)`, the length of the fitted direction.
    pub fn effect_size(&self) -> f64 {
        self.b_hat.norm()
    }
}

/// `log(1 + e^h)` without overflow.
pub fn softplus(h: f64) -> f64 {
    if h > 0.0 {
        h + (-h).exp().ln_1p()
    } else {
        h.exp().ln_1p()
    }
}

/// `1 / (1 + e^-h)` without overflow.
pub fn logistic(h: f64) -> f64 {
    if h >= 0.0 {
        1.0 / (1.0 + (-h).exp())
    } else {
        let e = h.exp();
        e / (1.0 + e)
    }
}

/// `n^-1 sum_i [y_i h_i - log(1 + e^{h_i})]` with `h_i = h(beta; x_i, mu)`.
pub fn empirical_loglik<S: GeodesicSpace + ?Sized>(
    space: &S,
    data: &Dataset,
    mu: &Point,
    beta: &Point,
) -> Result<f64> {
    let mut total = 0.0;
    for (x, &y) in data.points().iter().zip(data.labels()) {
        let h = alexandrov_inner_product(space, mu, x, beta)?;
        total += if y { h } else { 0.0 } - softplus(h);
    }
    Ok(total / data.len() as f64)
}

/// Outcome of [`LogisticProblem::maximize`].
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub b: Vec<f64>,
    pub loglik: f64,
    pub grad_norm: f64,
    pub iters: usize,
    pub converged: bool,
    pub separated: bool,
    /// Log-likelihood at the start and after every accepted step.
    pub loglik_trace: Vec<f64>,
    /// Coefficients at the start and after every accepted step.
    pub b_trace: Vec<Vec<f64>>,
}

/// No-intercept logistic likelihood in tangent coordinates.
#[derive(Debug, Clone)]
pub struct LogisticProblem {
    /// One row per observation.
    z: DMatrix<f64>,
}

impl LogisticProblem {
    pub fn new(z: DMatrix<f64>) -> Result<Self> {
        if z.nrows() == 0 {
            return Err(GeoError::Empty("design matrix"));
        }
        Ok(LogisticProblem { z })
    }

    /// Frame coordinates of `log_mu x_i` for every covariate.
    pub fn from_points<S: GeodesicSpace + ?Sized>(space: &S, mu: &Point, points: &[Point]) -> Result<Self> {
        let dim = space.capabilities().dim;
        let mut z = DMatrix::zeros(points.len(), dim);
        for (i, x) in points.iter().enumerate() {
            let v = space.log_map(mu, x)?;
            for (j, c) in v.coeffs.iter().enumerate() {
                z[(i, j)] = *c;
            }
        }
        LogisticProblem::new(z)
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.z
    }

    pub fn n(&self) -> usize {
        self.z.nrows()
    }

    pub fn dim(&self) -> usize {
        self.z.ncols()
    }

    fn check(&self, labels: &[bool], b: &[f64]) -> Result<()> {
        if labels.len() != self.n() {
            return Err(GeoError::DimensionMismatch {
                expected: self.n(),
                got: labels.len(),
            });
        }
        if b.len() != self.dim() {
            return Err(GeoError::DimensionMismatch {
                expected: self.dim(),
                got: b.len(),
            });
        }
        Ok(())
    }

    fn linear(&self, b: &[f64]) -> DVector<f64> {
        &self.z * DVector::from_column_slice(b)
    }

    pub fn loglik(&self, labels: &[bool], b: &[f64]) -> Result<f64> {
        self.check(labels, b)?;
        Ok(self.loglik_of(labels, &self.linear(b)))
    }

    fn loglik_of(&self, labels: &[bool], h: &DVector<f64>) -> f64 {
        let total: f64 = h
            .iter()
            .zip(labels)
            .map(|(&h, &y)| if y { h } else { 0.0 } - softplus(h))
            .sum();
        total / self.n() as f64
    }

    pub fn gradient(&self, labels: &[bool], b: &[f64]) -> Result<Vec<f64>> {
        self.check(labels, b)?;
        Ok(self.gradient_of(labels, &self.linear(b)).as_slice().to_vec())
    }

    fn gradient_of(&self, labels: &[bool], h: &DVector<f64>) -> DVector<f64> {
        let resid = DVector::from_iterator(
            self.n(),
            h.iter()
                .zip(labels)
                .map(|(&h, &y)| f64::from(u8::from(y)) - logistic(h)),
        );
        self.z.tr_mul(&resid) / self.n() as f64
    }

    /// `n^-1 Z^T W Z` with `W = diag(p_i (1 - p_i))`.
    pub fn neg_hessian(&self, b: &[f64]) -> Result<DMatrix<f64>> {
        if b.len() != self.dim() {
            return Err(GeoError::DimensionMismatch {
                expected: self.dim(),
                got: b.len(),
            });
        }
        Ok(self.neg_hessian_of(&self.linear(b)))
    }

    fn neg_hessian_of(&self, h: &DVector<f64>) -> DMatrix<f64> {
        let mut wz = self.z.clone();
        for (i, &hi) in h.iter().enumerate() {
            let p = logistic(hi);
            let w = p * (1.0 - p);
            wz.row_mut(i).scale_mut(w);
        }
        self.z.tr_mul(&wz) / self.n() as f64
    }

    /// Damped Newton ascent from `b = 0`.
    ///
    /// Each step is halved (up to 30 times) until the likelihood does not
    /// decrease by more than floating-point rounding ([`ROUNDING_SLACK`]). A singular Hessian is regularized with a growing ridge.
    /// Separation is reported when an iterate strictly separates the two
    /// classes (which proves the maximizer does not exist), when `b` grows past
    /// `separation_threshold` without the gradient vanishing, or when all labels
    /// are equal.
    pub fn maximize(&self, labels: &[bool], opts: &FitOptions) -> Result<NewtonOutcome> {
        opts.validate()?;
        let dim = self.dim();
        let mut b = vec![0.0; dim];
        self.check(labels, &b)?;

        let mut h = self.linear(&b);
        let mut ll = self.loglik_of(labels, &h);
        let mut grad = self.gradient_of(labels, &h);
        let mut trace = vec![ll];
        let mut b_trace = vec![b.clone()];
        let single_class = labels.iter().all(|&y| y) || labels.iter().all(|&y| !y);
        if single_class {
            return Ok(NewtonOutcome {
                b,
                loglik: ll,
                grad_norm: grad.norm(),
                iters: 0,
                converged: false,
                separated: true,
                loglik_trace: trace,
                b_trace,
            });
        }

        let mut iters = 0;
        let mut converged = false;
        let mut separated = false;
        loop {
            // A separating iterate proves the supremum is not attained, even when
            // the gradient has already decayed below tolerance.
            if strictly_separates(&h, labels) {
                separated = true;
                break;
            }
            let g = grad.norm();
            if g <= opts.grad_tol {
                converged = true;
                break;
            }
            if norm(&b) > opts.separation_threshold {
                separated = true;
                break;
            }
            if iters >= opts.max_iters {
                break;
            }
            iters += 1;

            let step = solve_ridged(self.neg_hessian_of(&h), &grad);
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..=30 {
                let cand: Vec<f64> = b.iter().zip(step.iter()).map(|(x, s)| x + alpha * s).collect();
                let ch = self.linear(&cand);
                let cll = self.loglik_of(labels, &ch);
                if cll >= ll - ROUNDING_SLACK * (1.0 + ll.abs()) {
                    b = cand;
                    h = ch;
                    ll = cll;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
            grad = self.gradient_of(labels, &h);
            trace.push(ll);
            b_trace.push(b.clone());
        }

        Ok(NewtonOutcome {
            b,
            loglik: ll,
            grad_norm: grad.norm(),
            iters,
            converged,
            separated,
            loglik_trace: trace,
            b_trace,
        })
    }
}

fn strictly_separates(h: &DVector<f64>, labels: &[bool]) -> bool {
    h.iter()
        .zip(labels)
        .all(|(&h, &y)| if y { h > 0.0 } else { h < 0.0 })
}

fn solve_ridged(hess: DMatrix<f64>, grad: &DVector<f64>) -> DVector<f64> {
    if let Some(ch) = hess.clone().cholesky() {
        return ch.solve(grad);
    }
    let scale = hess.diagonal().amax().max(f64::MIN_POSITIVE);
    let mut ridge = scale * 1e-12;
    for _ in 0..40 {
        let mut m = hess.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += ridge;
        }
        if let Some(ch) = m.cholesky() {
            return ch.solve(grad);
        }
        ridge *= 10.0;
    }
    // Gradient ascent as a last resort.
    grad.clone()
}

/// Two-stage estimator: sample Fréchet mean, then likelihood maximization in
/// the tangent space at that mean.
pub fn fit<S: GeodesicSpace + ?Sized>(space: &S, data: &Dataset, opts: &FitOptions) -> Result<FitResult> {
    opts.validate()?;
    if data.space_id() != space.id() {
        return Err(GeoError::SpaceMismatch {
            expected: space.id().to_string(),
            found: data.space_id().to_string(),
        });
    }
    if !space.capabilities().has_chart {
        return Err(GeoError::NoChart(space.id().to_string()));
    }
    let (mu_hat, frechet) = match &opts.mu_override {
        Some(mu) => {
            space.ensure_member(mu)?;
            (mu.clone(), None)
        }
        None => {
            let r = frechet_mean(space, data.points(), &opts.frechet)?;
            (r.mean.clone(), Some(r))
        }
    };
    let problem = LogisticProblem::from_points(space, &mu_hat, data.points())?;
    let out = problem.maximize(data.labels(), opts)?;
    assemble(space, mu_hat, out, frechet)
}

/// Builds a [`FitResult`] from a Newton outcome at a given mean.
pub fn assemble<S: GeodesicSpace + ?Sized>(
    space: &S,
    mu_hat: Point,
    out: NewtonOutcome,
    frechet: Option<FrechetResult>,
) -> Result<FitResult> {
    let b_hat = TangentVector::new(mu_hat.clone(), out.b);
    let beta_hat = space.exp_map(&b_hat)?;
    let back = space.log_map(&mu_hat, &beta_hat)?;
    let beta_projected = back
        .coeffs
        .iter()
        .zip(&b_hat.coeffs)
        .any(|(a, b)| (a - b).abs() > 1e-8 * (1.0 + b.abs()));
    Ok(FitResult {
        mu_hat,
        beta_hat,
        b_hat,
        loglik: out.loglik,
        grad_norm: out.grad_norm,
        iters: out.iters,
        converged: out.converged,
        separated: out.separated,
        beta_projected,
        frechet,
    })
}

/// Estimated log odds `h(beta_hat; x, mu_hat)`.
pub fn log_odds<S: GeodesicSpace + ?Sized>(space: &S, fitted: &FitResult, x: &Point) -> Result<f64> {
    alexandrov_inner_product(space, &fitted.mu_hat, x, &fitted.beta_hat)
}

/// `P_hat(Y=1 | x) = {1 + exp(-h(beta_hat; x, mu_hat))}^-1`.
pub fn predict_prob<S: GeodesicSpace + ?Sized>(space: &S, fitted: &FitResult, x: &Point) -> Result<f64> {
    Ok(logistic(log_odds(space, fitted, x)?))
}

/// Plug-in classifier: class 1 iff `h(beta_hat; x, mu_hat) >= 0`.
pub fn classify<S: GeodesicSpace + ?Sized>(space: &S, fitted: &FitResult, x: &Point) -> Result<bool> {
    Ok(log_odds(space, fitted, x)? >= 0.0)
}

/// Bayes classifier for known parameters: class 1 iff `h(beta*; x, mu*) >= 0`.
pub fn bayes_classify<S: GeodesicSpace + ?Sized>(
    space: &S,
    mu_star: &Point,
    beta_star: &Point,
    x: &Point,
) -> Result<bool> {
    Ok(alexandrov_inner_product(space, mu_star, x, beta_star)? >= 0.0)
}
