//! Shared builders, oracles and invariant checks for the integration tests and
//! the acceptance harness.
#![allow(dead_code)]

use std::sync::Arc;

use geolog::frechet::{frechet_mean, FrechetSolveOptions};
use geolog::metric::{alexandrov_inner_product, alexandrov_inner_product_ladder, AngleLadder};
use geolog::regression::{LogisticProblem, ROUNDING_SLACK};
use geolog::spaces::{
    EuclideanSpace, ProductSpace, SpdLogCholeskySpace, SphereQuadrantSpace, Wasserstein1DSpace,
};
use geolog::{GeodesicQuery, GeodesicSpace, Point, TangentVector};
use nalgebra::DMatrix;

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

/// Test spaces, each with a recipe turning raw values in `[-1, 1]` into a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Euclid,
    Spd,
    Sphere,
    Wasserstein,
    Product,
}

pub const ALL_KINDS: [Kind; 5] = [Kind::Euclid, Kind::Spd, Kind::Sphere, Kind::Wasserstein, Kind::Product];
pub const WASS_GRID: usize = 10;

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Euclid => "euclidean(3)",
            Kind::Spd => "spd(3)",
            Kind::Sphere => "sphere(2)",
            Kind::Wasserstein => "wasserstein1d(10)",
            Kind::Product => "euclidean(2)xspd(2)",
        }
    }

    pub fn space(self) -> Arc<dyn GeodesicSpace> {
        match self {
            Kind::Euclid => Arc::new(EuclideanSpace::new(3).unwrap()),
            Kind::Spd => Arc::new(SpdLogCholeskySpace::new(3).unwrap()),
            Kind::Sphere => Arc::new(SphereQuadrantSpace::new(2).unwrap()),
            Kind::Wasserstein => Arc::new(Wasserstein1DSpace::new(WASS_GRID).unwrap()),
            Kind::Product => Arc::new(product()),
        }
    }

    pub fn raw_len(self) -> usize {
        match self {
            Kind::Euclid => 3,
            Kind::Spd => 6,
            Kind::Sphere => 3,
            Kind::Wasserstein => WASS_GRID,
            Kind::Product => 5,
        }
    }

    /// Whether straight-line chart moves can leave the space.
    pub fn bounded(self) -> bool {
        matches!(self, Kind::Sphere | Kind::Wasserstein)
    }

    pub fn point(self, space: &dyn GeodesicSpace, raw: &[f64]) -> Point {
        assert_eq!(raw.len(), self.raw_len());
        let coords = match self {
            Kind::Euclid => raw.iter().map(|x| 2.0 * x).collect(),
            Kind::Spd => SpdLogCholeskySpace::new(3).unwrap().from_chart(raw).unwrap().into_coords(),
            Kind::Sphere => {
                let v: Vec<f64> = raw.iter().map(|x| x.abs() + 0.05).collect();
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.iter().map(|x| x / n).collect()
            }
            Kind::Wasserstein => {
                let mut q = Vec::with_capacity(raw.len());
                let mut acc = 2.0 * raw[0];
                q.push(acc);
                for x in &raw[1..] {
                    acc += 0.3 * (x + 1.0);
                    q.push(acc);
                }
                q
            }
            Kind::Product => {
                let mut c: Vec<f64> = raw[..2].iter().map(|x| 2.0 * x).collect();
                c.extend(SpdLogCholeskySpace::new(2).unwrap().from_chart(&raw[2..]).unwrap().into_coords());
                c
            }
        };
        space.point(coords).unwrap()
    }
}

pub fn product() -> ProductSpace {
    ProductSpace::new(vec![
        Arc::new(EuclideanSpace::new(2).unwrap()),
        Arc::new(SpdLogCholeskySpace::new(2).unwrap()),
    ])
    .unwrap()
}

/// A tangent vector at `base` with norm `radius` in the direction of `raw`.
pub fn tangent(base: &Point, raw: &[f64], radius: f64) -> TangentVector {
    let n = raw.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
    TangentVector::new(base.clone(), raw.iter().map(|x| x * radius / n).collect())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

pub fn distance_axioms(s: &dyn GeodesicSpace, p: &Point, q: &Point, r: &Point) -> Check {
    let tol = 1e-9;
    let pq = s.distance(p, q).unwrap();
    let qp = s.distance(q, p).unwrap();
    let qr = s.distance(q, r).unwrap();
    let pr = s.distance(p, r).unwrap();
    ensure!(close(pq, qp, tol), "symmetry {pq} vs {qp}");
    ensure!(s.distance(p, p).unwrap() <= tol, "d(p,p) != 0");
    ensure!(pq >= 0.0, "negative distance");
    ensure!(pr <= pq + qr + tol, "triangle {pr} > {pq} + {qr}");
    Ok(())
}

pub fn geodesic_parameterization(s: &dyn GeodesicSpace, p: &Point, q: &Point) -> Check {
    let d = s.distance(p, q).unwrap();
    for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let g = s.geodesic_point(&GeodesicQuery::new(p.clone(), q.clone(), t).unwrap()).unwrap();
        let dt = s.distance(p, &g).unwrap();
        ensure!((dt - t * d).abs() <= 1e-8, "d(p, g({t})) = {dt}, want {}", t * d);
    }
    Ok(())
}

pub fn inner_product_symmetry_and_bound(s: &dyn GeodesicSpace, mu: &Point, x: &Point, b: &Point) -> Check {
    let h1 = alexandrov_inner_product(s, mu, x, b).unwrap();
    let h2 = alexandrov_inner_product(s, mu, b, x).unwrap();
    ensure!((h1 - h2).abs() <= 1e-9, "h not symmetric: {h1} vs {h2}");
    let bound = s.distance(mu, x).unwrap() * s.distance(mu, b).unwrap();
    ensure!(h1.abs() <= bound * (1.0 + 1e-12) + 1e-15, "|h| = {} > {bound}", h1.abs());
    Ok(())
}

pub fn euclidean_reduction(mu: &[f64], x: &[f64], b: &[f64]) -> Check {
    let s = EuclideanSpace::new(mu.len()).unwrap();
    let (pm, px, pb) = (s.point(mu.to_vec()).unwrap(), s.point(x.to_vec()).unwrap(), s.point(b.to_vec()).unwrap());
    let h = alexandrov_inner_product(&s, &pm, &px, &pb).unwrap();
    let want: f64 = (0..mu.len()).map(|i| (x[i] - mu[i]) * (b[i] - mu[i])).sum();
    ensure!((h - want).abs() <= 1e-12, "h = {h}, (x-mu).(b-mu) = {want}");
    Ok(())
}

/// Inner product via log maps against the comparison-angle ladder.
pub fn chart_matches_ladder(s: &dyn GeodesicSpace, mu: &Point, x: &Point, b: &Point) -> Check {
    let chart = alexandrov_inner_product(s, mu, x, b).unwrap();
    match alexandrov_inner_product_ladder(s, mu, x, b, &AngleLadder::default()) {
        Ok(ladder) => {
            ensure!((chart - ladder).abs() <= 1e-6, "chart {chart} vs ladder {ladder}");
            Ok(())
        }
        Err(e) => Err(format!("ladder failed: {e}")),
    }
}

pub fn exp_log_round_trip(s: &dyn GeodesicSpace, p: &Point, q: &Point) -> Check {
    let v = s.log_map(p, q).unwrap();
    ensure!(close(v.norm(), s.distance(p, q).unwrap(), 1e-10), "|log| != d");
    let back = s.exp_map(&v).map_err(|e| e.to_string())?;
    let err = s.distance(&back, q).unwrap();
    ensure!(err <= 1e-8, "exp(log q) off by {err}");
    Ok(())
}

/// Native geodesic against `exp_p(t log_p q)`.
pub fn geodesic_matches_chart(s: &dyn GeodesicSpace, p: &Point, q: &Point) -> Check {
    let v = s.log_map(p, q).unwrap();
    for t in [0.1, 0.3, 0.5, 0.9] {
        let g = s.geodesic_point(&GeodesicQuery::new(p.clone(), q.clone(), t).unwrap()).unwrap();
        let e = s.exp_map(&v.scaled(t)).map_err(|e| e.to_string())?;
        let err = s.distance(&g, &e).unwrap();
        ensure!(err <= 1e-8, "t = {t}: native vs chart {err}");
    }
    Ok(())
}

pub fn cholesky_round_trip(raw: &[f64]) -> Check {
    let s = SpdLogCholeskySpace::new(3).unwrap();
    let p = s.from_chart(raw).unwrap();
    let m = s.matrix(&p).unwrap();
    let l = s.cholesky_factor(&p).unwrap();
    let err = (&l * l.transpose() - &m).amax();
    ensure!(err <= 1e-10 * (1.0 + m.amax()), "L L^T - P = {err}");
    let phi = s.chart(&p).unwrap();
    let d = phi.iter().zip(raw).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure!(d <= 1e-10, "chart round trip {d}");
    Ok(())
}

pub fn is_nondecreasing(c: &[f64]) -> bool {
    c.windows(2).all(|w| w[1] >= w[0] - 1e-12)
}

/// Every operation producing a Wasserstein point yields a nondecreasing vector.
pub fn wasserstein_monotone(p: &Point, q: &Point, raw: &[f64], scale: f64) -> Check {
    let s = Wasserstein1DSpace::new(WASS_GRID).unwrap();
    for t in [0.0, 0.3, 0.7, 1.0] {
        let g = s.geodesic_point(&GeodesicQuery::new(p.clone(), q.clone(), t).unwrap()).unwrap();
        ensure!(is_nondecreasing(g.coords()), "geodesic at {t} not monotone");
    }
    let v = TangentVector::new(p.clone(), raw.iter().map(|x| x * scale).collect());
    let (e, _) = s.exp_with_projection(&v).unwrap();
    ensure!(is_nondecreasing(e.coords()), "exp not monotone");
    let m = frechet_mean(&s, &[p.clone(), q.clone(), e], &FrechetSolveOptions::default()).unwrap();
    ensure!(is_nondecreasing(m.mean.coords()), "mean not monotone");
    Ok(())
}

/// First-order condition, monotone objective and order invariance.
pub fn frechet_properties(s: &dyn GeodesicSpace, pts: &[Point]) -> Check {
    let opts = FrechetSolveOptions::default();
    let r = frechet_mean(s, pts, &opts).unwrap();
    ensure!(r.converged, "not converged: grad {}", r.grad_norm);
    let n = pts.len() as f64;
    let mut g = vec![0.0; s.capabilities().dim];
    for x in pts {
        for (a, c) in g.iter_mut().zip(s.log_map(&r.mean, x).unwrap().coeffs) {
            *a += c / n;
        }
    }
    let gn = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    ensure!(gn <= opts.tol, "first-order residual {gn}");
    ensure!(
        r.objective_trace.windows(2).all(|w| w[1] <= w[0] + ROUNDING_SLACK * (1.0 + w[0])),
        "objective increased: {:?}",
        r.objective_trace
    );
    let mut rev = pts.to_vec();
    rev.reverse();
    rev.rotate_left(pts.len() / 3);
    let r2 = frechet_mean(s, &rev, &opts).unwrap();
    let d = r
        .mean
        .coords()
        .iter()
        .zip(r2.mean.coords())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    ensure!(d < 1e-10, "order changed the mean by {d}");
    Ok(())
}

/// Central differences against the analytic gradient of the tangent likelihood.
pub fn gradient_matches_fd(problem: &LogisticProblem, labels: &[bool], b: &[f64]) -> Check {
    let g = problem.gradient(labels, b).unwrap();
    let eps = 1e-5;
    let mut fd = vec![0.0; b.len()];
    for j in 0..b.len() {
        let mut bp = b.to_vec();
        let mut bm = b.to_vec();
        bp[j] += eps;
        bm[j] -= eps;
        fd[j] = (problem.loglik(labels, &bp).unwrap() - problem.loglik(labels, &bm).unwrap()) / (2.0 * eps);
    }
    let num: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let den: f64 = g.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-3);
    ensure!(num / den <= 1e-6, "relative gradient error {}", num / den);
    Ok(())
}

/// Ascent of every Newton step and a positive semidefinite negative Hessian at every iterate.
pub fn newton_ascent_and_concavity(problem: &LogisticProblem, labels: &[bool]) -> Check {
    let out = problem.maximize(labels, &Default::default()).unwrap();
    ensure!(
        out.loglik_trace.windows(2).all(|w| w[1] >= w[0] - ROUNDING_SLACK * (1.0 + w[0].abs())),
        "likelihood decreased: {:?}",
        out.loglik_trace
    );
    for b in &out.b_trace {
        let h = problem.neg_hessian(b).unwrap();
        let min = h.symmetric_eigen().eigenvalues.min();
        ensure!(min >= -1e-10, "negative Hessian eigenvalue {min}");
    }
    Ok(())
}

/// Design matrix with rows `z_i`.
pub fn design(rows: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
}

/// Plain no-intercept IRLS with its own elimination solver.
pub fn irls(z: &[Vec<f64>], y: &[bool]) -> Vec<f64> {
    let d = z[0].len();
    let mut b = vec![0.0; d];
    for _ in 0..200 {
        let mut a = vec![vec![0.0; d]; d];
        let mut rhs = vec![0.0; d];
        for (zi, &yi) in z.iter().zip(y) {
            let eta: f64 = zi.iter().zip(&b).map(|(u, v)| u * v).sum();
            let p = 1.0 / (1.0 + (-eta).exp());
            let w = p * (1.0 - p);
            let work = eta + (if yi { 1.0 } else { 0.0 } - p) / w;
            for j in 0..d {
                rhs[j] += w * zi[j] * work;
                for k in 0..d {
                    a[j][k] += w * zi[j] * zi[k];
                }
            }
        }
        let next = gauss_solve(a, rhs);
        let change = next.iter().zip(&b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        b = next;
        if change < 1e-14 {
            break;
        }
    }
    b
}

fn gauss_solve(mut a: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Vec<f64> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        rhs.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (rhs[i] - s) / a[i][i];
    }
    x
}

/// Least-squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
