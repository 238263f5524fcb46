//! Distributions on the line under the 2-Wasserstein metric, represented by
//! their quantile functions on the grid `(k - 1/2) / G`.
//!
//! The distance is the root-mean-square difference of quantile vectors, so the
//! space is a convex cone inside a flat space. Frame coefficients of a tangent
//! increment `v` are `v / sqrt(G)`.

use crate::error::{GeoError, Result};
use crate::metric::{
    dot, CurvatureClass, GeodesicSpace, Point, SpaceCapabilities, SpaceId, TangentVector,
};

pub const DEFAULT_GRID: usize = 100;
const MONOTONE_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Wasserstein1DSpace {
    grid: usize,
    id: SpaceId,
}

impl Wasserstein1DSpace {
    pub fn new(grid: usize) -> Result<Self> {
        if grid == 0 {
            return Err(GeoError::InvalidConfig("quantile grid must be nonempty".into()));
        }
        Ok(Wasserstein1DSpace {
            grid,
            id: SpaceId::new(format!("wasserstein1d({grid})")),
        })
    }

    pub fn grid_size(&self) -> usize {
        self.grid
    }

    /// Quantile levels `(k - 1/2) / G`.
    pub fn levels(&self) -> Vec<f64> {
        let g = self.grid as f64;
        (1..=self.grid).map(|k| (k as f64 - 0.5) / g).collect()
    }

    /// Builds a point by evaluating a quantile function on the grid.
    pub fn point_from_quantile_fn(&self, f: impl Fn(f64) -> f64) -> Result<Point> {
        self.point(self.levels().into_iter().map(f).collect())
    }

    /// Exponential map that also reports whether the isotonic projection was applied.
    pub fn exp_with_projection(&self, v: &TangentVector) -> Result<(Point, bool)> {
        self.ensure_member(&v.base)?;
        if v.coeffs.len() != self.grid {
            return Err(GeoError::DimensionMismatch {
                expected: self.grid,
                got: v.coeffs.len(),
            });
        }
        let (c, projected) = self.exp_raw(v.base.coords(), &v.coeffs);
        Ok((Point::from_parts(self.id.clone(), c), projected))
    }

    fn exp_raw(&self, p: &[f64], c: &[f64]) -> (Vec<f64>, bool) {
        let s = (self.grid as f64).sqrt();
        let x: Vec<f64> = p.iter().zip(c).map(|(a, b)| a + s * b).collect();
        if is_monotone(&x) {
            (x, false)
        } else {
            (isotonic_projection(&x), true)
        }
    }
}

fn is_monotone(x: &[f64]) -> bool {
    x.windows(2).all(|w| w[1] >= w[0] - MONOTONE_TOL)
}

/// Least-squares projection onto nondecreasing vectors (pool adjacent violators).
pub fn isotonic_projection(x: &[f64]) -> Vec<f64> {
    // Blocks of (sum, count).
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(x.len());
    for &v in x {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (s1, n1) = blocks[blocks.len() - 1];
            let (s0, n0) = blocks[blocks.len() - 2];
            if s0 / n0 as f64 > s1 / n1 as f64 {
                blocks.pop();
                let last = blocks.len() - 1;
                blocks[last] = (s0 + s1, n0 + n1);
            } else {
                break;
            }
        }
    }
    let mut out = Vec::with_capacity(x.len());
    for (s, n) in blocks {
        out.extend(std::iter::repeat_n(s / n as f64, n));
    }
    out
}

impl GeodesicSpace for Wasserstein1DSpace {
    fn id(&self) -> &SpaceId {
        &self.id
    }

    fn capabilities(&self) -> SpaceCapabilities {
        SpaceCapabilities {
            dim: self.grid,
            has_chart: true,
            curvature_class: CurvatureClass::Flat,
        }
    }

    fn ambient_size(&self) -> usize {
        self.grid
    }

    fn check_membership(&self, coords: &[f64]) -> Result<()> {
        if !is_monotone(coords) {
            return Err(GeoError::NotInSpace {
                space: self.id.to_string(),
                reason: "quantile vector is not nondecreasing".into(),
            });
        }
        Ok(())
    }

    fn distance_coords(&self, p: &[f64], q: &[f64]) -> f64 {
        let ss: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
        (ss / self.grid as f64).sqrt()
    }

    fn geodesic_coords(&self, p: &[f64], q: &[f64], t: f64) -> Result<Vec<f64>> {
        Ok(p.iter().zip(q).map(|(a, b)| a + t * (b - a)).collect())
    }

    fn log_coords(&self, p: &[f64], q: &[f64]) -> Result<Vec<f64>> {
        let s = (self.grid as f64).sqrt();
        Ok(q.iter().zip(p).map(|(b, a)| (b - a) / s).collect())
    }

    fn exp_coords(&self, p: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        Ok(self.exp_raw(p, v).0)
    }

    fn coeffs_to_ambient(&self, _p: &[f64], c: &[f64]) -> Result<Vec<f64>> {
        let s = (self.grid as f64).sqrt();
        Ok(c.iter().map(|x| x * s).collect())
    }

    fn ambient_to_coeffs(&self, _p: &[f64], a: &[f64]) -> Result<Vec<f64>> {
        let s = (self.grid as f64).sqrt();
        Ok(a.iter().map(|x| x / s).collect())
    }

    fn ambient_inner(&self, _p: &[f64], u: &[f64], v: &[f64]) -> Result<f64> {
        Ok(dot(u, v) / self.grid as f64)
    }

    /// Consecutive quantile gaps `p_{k+1} - p_k + s sqrt(G) (u_{k+1} - u_k)` stay nonnegative.
    fn ray_range(&self, p: &[f64], dir: &[f64]) -> (f64, f64) {
        let sg = (self.grid as f64).sqrt();
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for k in 0..self.grid.saturating_sub(1) {
            let gap = p[k + 1] - p[k];
            let slope = sg * (dir[k + 1] - dir[k]);
            if slope > 0.0 {
                lo = lo.max(-gap / slope);
            } else if slope < 0.0 {
                hi = hi.min(-gap / slope);
            }
        }
        (lo, hi)
    }
}
