//! Sample Fréchet means by fixed-point iteration in the tangent space.

use crate::error::{GeoError, Result};
use crate::metric::{norm, GeodesicSpace, Point, TangentVector};
use crate::regression::ROUNDING_SLACK;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrechetSolveOptions {
    pub max_iters: usize,
    /// Threshold on the norm of the mean log map.
    pub tol: f64,
    pub step: f64,
}

impl Default for FrechetSolveOptions {
    fn default() -> Self {
        FrechetSolveOptions {
            max_iters: 200,
            tol: 1e-10,
            step: 1.0,
        }
    }
}

impl FrechetSolveOptions {
    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(GeoError::InvalidConfig("max_iters must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(GeoError::InvalidConfig("tol must be positive".into()));
        }
        if !(self.step > 0.0 && self.step <= 1.0) {
            return Err(GeoError::InvalidConfig("step must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrechetResult {
    pub mean: Point,
    /// Mean squared distance to the sample at `mean`.
    pub objective: f64,
    pub grad_norm: f64,
    pub iters: usize,
    pub converged: bool,
    /// Objective after initialization and after every accepted step.
    pub objective_trace: Vec<f64>,
}

struct Evaluation {
    objective: f64,
    mean_log: Vec<f64>,
}

fn evaluate<S: GeodesicSpace + ?Sized>(space: &S, mu: &Point, points: &[Point]) -> Result<Evaluation> {
    let dim = space.capabilities().dim;
    let n = points.len() as f64;
    let mut mean_log = vec![0.0; dim];
    let mut objective = 0.0;
    for x in points {
        let v = space.log_map(mu, x)?;
        objective += v.coeffs.iter().map(|c| c * c).sum::<f64>();
        for (m, c) in mean_log.iter_mut().zip(&v.coeffs) {
            *m += c;
        }
    }
    mean_log.iter_mut().for_each(|m| *m /= n);
    Ok(Evaluation {
        objective: objective / n,
        mean_log,
    })
}

/// Minimizes `(1/n) sum d^2(X_i, mu)` over `mu`.
///
/// Starts from the chart average taken at the lexicographically smallest sample
/// point, then iterates
/// `mu <- exp_mu(step * mean_i log_mu X_i)`, halving a step whenever it would
/// increase the objective beyond rounding. Never fails silently on non-convergence: the result
/// carries `converged = false` instead.
pub fn frechet_mean<S: GeodesicSpace + ?Sized>(
    space: &S,
    points: &[Point],
    opts: &FrechetSolveOptions,
) -> Result<FrechetResult> {
    opts.validate()?;
    if points.is_empty() {
        return Err(GeoError::Empty("point sample"));
    }
    if !space.capabilities().has_chart {
        return Err(GeoError::NoChart(space.id().to_string()));
    }
    for p in points {
        space.ensure_member(p)?;
    }

    // Anchor choice must not depend on input order.
    let anchor_point = points
        .iter()
        .min_by(|a, b| {
            a.coords()
                .iter()
                .zip(b.coords())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .expect("nonempty");
    let anchor = evaluate(space, anchor_point, points)?;
    let mut mu = space
        .exp_map(&TangentVector::new(anchor_point.clone(), anchor.mean_log))
        .unwrap_or_else(|_| anchor_point.clone());
    let mut eval = evaluate(space, &mu, points)?;
    let mut trace = vec![eval.objective];
    let mut iters = 0;

    while iters < opts.max_iters {
        let g = norm(&eval.mean_log);
        if g <= opts.tol {
            break;
        }
        iters += 1;
        let mut step = opts.step;
        let mut accepted = None;
        for _ in 0..30 {
            let v = TangentVector::new(mu.clone(), eval.mean_log.iter().map(|c| c * step).collect());
            if let Ok(cand) = space.exp_map(&v) {
                let ce = evaluate(space, &cand, points)?;
                if ce.objective <= eval.objective + ROUNDING_SLACK * (1.0 + eval.objective) {
                    accepted = Some((cand, ce));
                    break;
                }
            }
            step *= 0.5;
        }
        match accepted {
            Some((cand, ce)) => {
                mu = cand;
                eval = ce;
                trace.push(eval.objective);
            }
            // No descent possible at floating-point resolution.
            None => break,
        }
    }

    let grad_norm = norm(&eval.mean_log);
    Ok(FrechetResult {
        mean: mu,
        objective: eval.objective,
        grad_norm,
        iters,
        converged: grad_norm <= opts.tol,
        objective_trace: trace,
    })
}
