//! Symmetric positive-definite matrices under the Log-Cholesky metric.
//!
//! A point `P = L L^T` is stored as the `n(n+1)/2` lower-triangular entries of
//! `P`, row-major: `(0,0), (1,0), (1,1), (2,0), ...`. The chart
//! `phi(P) = (strict lower part of L, log diag L)` uses the same layout and is a
//! global isometry onto Euclidean space, so distances, geodesics, exp and log
//! are all straight-line operations in chart coordinates.
//!
//! The native tangent representation at `P` is a symmetric matrix `X` (stacked
//! the same way). It maps to a Cholesky-space tangent `L (L^-1 X L^-T)_1/2`,
//! where `(A)_1/2` keeps the strict lower part of `A` plus half its diagonal,
//! and the metric there is
//! `<A, B>_L = sum_{i>j} A_ij B_ij + sum_j A_jj B_jj / L_jj^2`.

use nalgebra::DMatrix;

use crate::error::{GeoError, Result};
use crate::metric::{
    coord_distance, CurvatureClass, GeodesicSpace, Point, SpaceCapabilities, SpaceId,
};

#[derive(Debug, Clone)]
pub struct SpdLogCholeskySpace {
    n: usize,
    id: SpaceId,
}

#[inline]
pub fn tri_index(i: usize, j: usize) -> usize {
    debug_assert!(j <= i);
    i * (i + 1) / 2 + j
}

impl SpdLogCholeskySpace {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(GeoError::InvalidConfig("SPD matrix order must be positive".into()));
        }
        Ok(SpdLogCholeskySpace {
            n,
            id: SpaceId::new(format!("spd({n})")),
        })
    }

    /// Matrix order `n`.
    pub fn order(&self) -> usize {
        self.n
    }

    pub fn identity(&self) -> Point {
        let mut c = vec![0.0; self.ambient_size()];
        for i in 0..self.n {
            c[tri_index(i, i)] = 1.0;
        }
        Point::from_parts(self.id.clone(), c)
    }

    /// Builds a point from a full matrix; only the lower triangle is read.
    pub fn point_from_matrix(&self, m: &DMatrix<f64>) -> Result<Point> {
        if m.nrows() != self.n || m.ncols() != self.n {
            return Err(GeoError::DimensionMismatch {
                expected: self.n * self.n,
                got: m.len(),
            });
        }
        self.point(self.stack_lower(m))
    }

    pub fn matrix(&self, p: &Point) -> Result<DMatrix<f64>> {
        self.ensure_member(p)?;
        Ok(self.unstack_symmetric(p.coords()))
    }

    /// Lower Cholesky factor `L` with `P = L L^T`.
    pub fn cholesky_factor(&self, p: &Point) -> Result<DMatrix<f64>> {
        self.ensure_member(p)?;
        self.factor(p.coords())
    }

    /// Log-Cholesky chart coordinates.
    pub fn chart(&self, p: &Point) -> Result<Vec<f64>> {
        self.ensure_member(p)?;
        self.chart_coords(p.coords())
    }

    pub fn from_chart(&self, c: &[f64]) -> Result<Point> {
        if c.len() != self.ambient_size() {
            return Err(GeoError::DimensionMismatch {
                expected: self.ambient_size(),
                got: c.len(),
            });
        }
        Ok(Point::from_parts(self.id.clone(), self.chart_inverse(c)))
    }

    fn stack_lower(&self, m: &DMatrix<f64>) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.ambient_size());
        for i in 0..self.n {
            for j in 0..=i {
                out.push(m[(i, j)]);
            }
        }
        out
    }

    fn unstack_symmetric(&self, c: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in 0..=i {
                let v = c[tri_index(i, j)];
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    fn factor(&self, c: &[f64]) -> Result<DMatrix<f64>> {
        let m = self.unstack_symmetric(c);
        let chol = m.cholesky().ok_or_else(|| GeoError::NotInSpace {
            space: self.id.to_string(),
            reason: "matrix is not positive definite".into(),
        })?;
        let l = chol.unpack();
        if (0..self.n).any(|i| !(l[(i, i)] > 0.0) || !l[(i, i)].is_finite()) {
            return Err(GeoError::NotInSpace {
                space: self.id.to_string(),
                reason: "Cholesky factor has a non-positive diagonal".into(),
            });
        }
        Ok(l)
    }

    fn chart_coords(&self, c: &[f64]) -> Result<Vec<f64>> {
        let l = self.factor(c)?;
        let mut out = Vec::with_capacity(self.ambient_size());
        for i in 0..self.n {
            for j in 0..=i {
                out.push(if i == j { l[(i, i)].ln() } else { l[(i, j)] });
            }
        }
        Ok(out)
    }

    fn chart_inverse(&self, c: &[f64]) -> Vec<f64> {
        let mut l = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in 0..=i {
                let v = c[tri_index(i, j)];
                l[(i, j)] = if i == j { v.exp() } else { v };
            }
        }
        let p = &l * l.transpose();
        self.stack_lower(&p)
    }

    /// `L^-1 X L^-T` for symmetric `X` given as stacked coordinates.
    fn whiten(&self, l: &DMatrix<f64>, x: &[f64]) -> Result<DMatrix<f64>> {
        let xm = self.unstack_symmetric(x);
        let singular = || GeoError::Degenerate("singular Cholesky factor".into());
        let a = l.solve_lower_triangular(&xm).ok_or_else(singular)?;
        l.solve_lower_triangular(&a.transpose()).ok_or_else(singular)
    }

    /// Cholesky-space tangent `L (L^-1 X L^-T)_1/2` of a symmetric `X`.
    fn cholesky_tangent(&self, l: &DMatrix<f64>, x: &[f64]) -> Result<DMatrix<f64>> {
        let mut w = self.whiten(l, x)?;
        for i in 0..self.n {
            w[(i, i)] *= 0.5;
            for j in (i + 1)..self.n {
                w[(i, j)] = 0.0;
            }
        }
        Ok(l * w)
    }
}

impl GeodesicSpace for SpdLogCholeskySpace {
    fn id(&self) -> &SpaceId {
        &self.id
    }

    fn capabilities(&self) -> SpaceCapabilities {
        SpaceCapabilities {
            dim: self.ambient_size(),
            has_chart: true,
            curvature_class: CurvatureClass::Flat,
        }
    }

    fn ambient_size(&self) -> usize {
        self.n * (self.n + 1) / 2
    }

    fn check_membership(&self, coords: &[f64]) -> Result<()> {
        self.factor(coords).map(|_| ())
    }

    fn distance_coords(&self, p: &[f64], q: &[f64]) -> f64 {
        match (self.chart_coords(p), self.chart_coords(q)) {
            (Ok(a), Ok(b)) => coord_distance(&a, &b),
            _ => f64::NAN,
        }
    }

    fn geodesic_coords(&self, p: &[f64], q: &[f64], t: f64) -> Result<Vec<f64>> {
        let a = self.chart_coords(p)?;
        let b = self.chart_coords(q)?;
        let c: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + t * (y - x)).collect();
        Ok(self.chart_inverse(&c))
    }

    fn log_coords(&self, p: &[f64], q: &[f64]) -> Result<Vec<f64>> {
        let a = self.chart_coords(p)?;
        let b = self.chart_coords(q)?;
        Ok(b.iter().zip(&a).map(|(y, x)| y - x).collect())
    }

    fn exp_coords(&self, p: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let a = self.chart_coords(p)?;
        let c: Vec<f64> = a.iter().zip(v).map(|(x, d)| x + d).collect();
        Ok(self.chart_inverse(&c))
    }

    fn tangent_ambient_size(&self) -> usize {
        self.ambient_size()
    }

    /// Chart increment `c` to the symmetric matrix `Xdot L^T + L Xdot^T`, where the
    /// Cholesky tangent `Xdot` has strict part `c` and diagonal `L_jj c_jj`.
    fn coeffs_to_ambient(&self, p: &[f64], c: &[f64]) -> Result<Vec<f64>> {
        let l = self.factor(p)?;
        let mut xdot = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in 0..=i {
                let v = c[tri_index(i, j)];
                xdot[(i, j)] = if i == j { l[(i, i)] * v } else { v };
            }
        }
        let x = &xdot * l.transpose() + &l * xdot.transpose();
        Ok(self.stack_lower(&x))
    }

    fn ambient_to_coeffs(&self, p: &[f64], a: &[f64]) -> Result<Vec<f64>> {
        let l = self.factor(p)?;
        let xdot = self.cholesky_tangent(&l, a)?;
        let mut out = Vec::with_capacity(self.ambient_size());
        for i in 0..self.n {
            for j in 0..=i {
                out.push(if i == j {
                    xdot[(i, i)] / l[(i, i)]
                } else {
                    xdot[(i, j)]
                });
            }
        }
        Ok(out)
    }

    fn ambient_inner(&self, p: &[f64], u: &[f64], v: &[f64]) -> Result<f64> {
        let l = self.factor(p)?;
        let a = self.cholesky_tangent(&l, u)?;
        let b = self.cholesky_tangent(&l, v)?;
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..i {
                s += a[(i, j)] * b[(i, j)];
            }
            s += a[(i, i)] * b[(i, i)] / (l[(i, i)] * l[(i, i)]);
        }
        Ok(s)
    }
}
