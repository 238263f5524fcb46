//! The closed positive quadrant of the unit sphere `S^D` with the angular distance.
//!
//! Tangent frames come from the Householder reflection exchanging `e_0` and the
//! base point `p`: the reflection maps `e_1..e_D` onto an orthonormal basis of
//! the tangent space at `p`.

use std::f64::consts::PI;

use crate::error::{GeoError, Result};
use crate::metric::{dot, norm, CurvatureClass, GeodesicSpace, SpaceCapabilities, SpaceId};

const UNIT_TOL: f64 = 1e-10;
const SNAP_TOL: f64 = 1e-12;
const ANTIPODAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct SphereQuadrantSpace {
    dim: usize,
    id: SpaceId,
}

impl SphereQuadrantSpace {
    /// Intrinsic dimension `dim`; points live in `R^(dim+1)`.
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(GeoError::InvalidConfig("sphere dimension must be positive".into()));
        }
        Ok(SphereQuadrantSpace {
            dim,
            id: SpaceId::new(format!("sphere({dim})")),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Householder vector `u = p - e_0`, with the first entry computed without cancellation.
    fn householder(p: &[f64]) -> Vec<f64> {
        let tail: f64 = p[1..].iter().map(|x| x * x).sum();
        let mut u = p.to_vec();
        u[0] = -tail / (1.0 + p[0]);
        u
    }

    fn reflect(u: &[f64], w: &mut [f64]) {
        let uu = dot(u, u);
        if uu < 1e-300 {
            return;
        }
        let k = 2.0 * dot(u, w) / uu;
        for (wi, ui) in w.iter_mut().zip(u) {
            *wi -= k * ui;
        }
    }

    fn tangent_from_coeffs(&self, p: &[f64], c: &[f64]) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.dim + 1);
        w.push(0.0);
        w.extend_from_slice(c);
        Self::reflect(&Self::householder(p), &mut w);
        w
    }

    fn snap_to_quadrant(&self, mut x: Vec<f64>) -> Result<Vec<f64>> {
        for v in x.iter_mut() {
            if *v < 0.0 {
                if *v > -SNAP_TOL {
                    *v = 0.0;
                } else {
                    return Err(GeoError::OutOfDomain {
                        space: self.id.to_string(),
                        reason: format!("coordinate {v:e} is negative"),
                    });
                }
            }
        }
        let n = norm(&x);
        x.iter_mut().for_each(|v| *v /= n);
        Ok(x)
    }
}

fn angle(p: &[f64], q: &[f64]) -> f64 {
    let diff: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
    let sum: f64 = p.iter().zip(q).map(|(a, b)| (a + b) * (a + b)).sum();
    2.0 * diff.sqrt().atan2(sum.sqrt())
}

impl GeodesicSpace for SphereQuadrantSpace {
    fn id(&self) -> &SpaceId {
        &self.id
    }

    fn capabilities(&self) -> SpaceCapabilities {
        SpaceCapabilities {
            dim: self.dim,
            has_chart: true,
            curvature_class: CurvatureClass::PositiveBounded,
        }
    }

    fn ambient_size(&self) -> usize {
        self.dim + 1
    }

    fn check_membership(&self, coords: &[f64]) -> Result<()> {
        let n = norm(coords);
        if (n - 1.0).abs() > UNIT_TOL {
            return Err(GeoError::NotInSpace {
                space: self.id.to_string(),
                reason: format!("norm {n} is not 1"),
            });
        }
        if let Some(v) = coords.iter().find(|v| **v < 0.0) {
            return Err(GeoError::NotInSpace {
                space: self.id.to_string(),
                reason: format!("coordinate {v} is negative"),
            });
        }
        Ok(())
    }

    fn distance_coords(&self, p: &[f64], q: &[f64]) -> f64 {
        angle(p, q)
    }

    fn geodesic_coords(&self, p: &[f64], q: &[f64], t: f64) -> Result<Vec<f64>> {
        let theta = angle(p, q);
        if theta < 1e-15 {
            return Ok(p.to_vec());
        }
        if theta > PI - ANTIPODAL_TOL {
            return Err(GeoError::NonUniqueGeodesic);
        }
        let s = theta.sin();
        let a = ((1.0 - t) * theta).sin() / s;
        let b = (t * theta).sin() / s;
        let x: Vec<f64> = p.iter().zip(q).map(|(pi, qi)| a * pi + b * qi).collect();
        self.snap_to_quadrant(x)
    }

    fn log_coords(&self, p: &[f64], q: &[f64]) -> Result<Vec<f64>> {
        let theta = angle(p, q);
        if theta > PI - ANTIPODAL_TOL {
            return Err(GeoError::NonUniqueGeodesic);
        }
        let pq = dot(p, q);
        let w: Vec<f64> = q.iter().zip(p).map(|(qi, pi)| qi - pq * pi).collect();
        let wn = norm(&w);
        if wn < 1e-300 || theta == 0.0 {
            return Ok(vec![0.0; self.dim]);
        }
        let v: Vec<f64> = w.iter().map(|x| x * theta / wn).collect();
        self.ambient_to_coeffs(p, &v)
    }

    fn exp_coords(&self, p: &[f64], c: &[f64]) -> Result<Vec<f64>> {
        let theta = norm(c);
        if theta == 0.0 {
            return Ok(p.to_vec());
        }
        let v = self.tangent_from_coeffs(p, c);
        let (s, co) = theta.sin_cos();
        let x: Vec<f64> = p
            .iter()
            .zip(&v)
            .map(|(pi, vi)| co * pi + s * vi / theta)
            .collect();
        self.snap_to_quadrant(x)
    }

    fn tangent_ambient_size(&self) -> usize {
        self.dim + 1
    }

    fn coeffs_to_ambient(&self, p: &[f64], c: &[f64]) -> Result<Vec<f64>> {
        Ok(self.tangent_from_coeffs(p, c))
    }

    /// Drops the normal component of `a` before reading off frame coefficients.
    fn ambient_to_coeffs(&self, p: &[f64], a: &[f64]) -> Result<Vec<f64>> {
        let mut w = a.to_vec();
        Self::reflect(&Self::householder(p), &mut w);
        Ok(w[1..].to_vec())
    }

    fn ambient_inner(&self, _p: &[f64], u: &[f64], v: &[f64]) -> Result<f64> {
        Ok(dot(u, v))
    }

    /// Each coordinate `p_j cos s + u_j sin s` must stay nonnegative.
    fn ray_range(&self, p: &[f64], dir: &[f64]) -> (f64, f64) {
        let n = norm(dir);
        if n == 0.0 {
            return (f64::NEG_INFINITY, f64::INFINITY);
        }
        let unit: Vec<f64> = dir.iter().map(|d| d / n).collect();
        let u = self.tangent_from_coeffs(p, &unit);
        let first_exit = |sign: f64| {
            p.iter()
                .zip(&u)
                .filter(|(pj, uj)| **pj != 0.0 || **uj != 0.0)
                .map(|(pj, uj)| pj.atan2(-sign * uj))
                .fold(PI, f64::min)
        };
        (-first_exit(-1.0), first_exit(1.0))
    }
}
