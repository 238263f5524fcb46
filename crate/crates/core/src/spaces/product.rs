use std::sync::Arc;

use crate::error::{GeoError, Result};
use crate::metric::{CurvatureClass, GeodesicSpace, SpaceCapabilities, SpaceId};

/// Cartesian product with the `l2` combination of factor distances.
///
/// Coordinates, frame coefficients and native tangents are concatenated factor by factor.
#[derive(Debug, Clone)]
pub struct ProductSpace {
    parts: Vec<Arc<dyn GeodesicSpace>>,
    id: SpaceId,
}

#[derive(Clone, Copy)]
enum Layout {
    Coords,
    Coeffs,
    Ambient,
}

impl ProductSpace {
    pub fn new(parts: Vec<Arc<dyn GeodesicSpace>>) -> Result<Self> {
        if parts.is_empty() {
            return Err(GeoError::InvalidConfig("product of zero spaces".into()));
        }
        let names: Vec<String> = parts.iter().map(|p| p.id().to_string()).collect();
        Ok(ProductSpace {
            id: SpaceId::new(format!("product({})", names.join(","))),
            parts,
        })
    }

    pub fn parts(&self) -> &[Arc<dyn GeodesicSpace>] {
        &self.parts
    }

    fn width(part: &dyn GeodesicSpace, layout: Layout) -> usize {
        match layout {
            Layout::Coords => part.ambient_size(),
            Layout::Coeffs => part.capabilities().dim,
            Layout::Ambient => part.tangent_ambient_size(),
        }
    }

    /// Splits a concatenated vector into per-factor slices.
    fn split<'a>(&self, v: &'a [f64], layout: Layout) -> Vec<&'a [f64]> {
        let mut out = Vec::with_capacity(self.parts.len());
        let mut at = 0;
        for part in &self.parts {
            let w = Self::width(part.as_ref(), layout);
            out.push(&v[at..at + w]);
            at += w;
        }
        out
    }

    fn each<F>(&self, a: &[f64], la: Layout, b: &[f64], lb: Layout, mut f: F) -> Result<Vec<f64>>
    where
        F: FnMut(&dyn GeodesicSpace, &[f64], &[f64]) -> Result<Vec<f64>>,
    {
        let mut out = Vec::new();
        for ((part, x), y) in self.parts.iter().zip(self.split(a, la)).zip(self.split(b, lb)) {
            out.extend(f(part.as_ref(), x, y)?);
        }
        Ok(out)
    }
}

impl GeodesicSpace for ProductSpace {
    fn id(&self) -> &SpaceId {
        &self.id
    }

    fn capabilities(&self) -> SpaceCapabilities {
        let caps: Vec<SpaceCapabilities> = self.parts.iter().map(|p| p.capabilities()).collect();
        let curvature_class = if caps.iter().all(|c| c.curvature_class == CurvatureClass::Flat) {
            CurvatureClass::Flat
        } else if caps
            .iter()
            .all(|c| c.curvature_class != CurvatureClass::PositiveBounded)
        {
            CurvatureClass::NonPositive
        } else {
            CurvatureClass::PositiveBounded
        };
        SpaceCapabilities {
            dim: caps.iter().map(|c| c.dim).sum(),
            has_chart: caps.iter().all(|c| c.has_chart),
            curvature_class,
        }
    }

    fn ambient_size(&self) -> usize {
        self.parts.iter().map(|p| p.ambient_size()).sum()
    }

    fn check_membership(&self, coords: &[f64]) -> Result<()> {
        for (part, c) in self.parts.iter().zip(self.split(coords, Layout::Coords)) {
            part.check_membership(c)?;
        }
        Ok(())
    }

    fn distance_coords(&self, p: &[f64], q: &[f64]) -> f64 {
        self.parts
            .iter()
            .zip(self.split(p, Layout::Coords))
            .zip(self.split(q, Layout::Coords))
            .map(|((part, a), b)| part.distance_coords(a, b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    fn geodesic_coords(&self, p: &[f64], q: &[f64], t: f64) -> Result<Vec<f64>> {
        self.each(p, Layout::Coords, q, Layout::Coords, |s, a, b| {
            s.geodesic_coords(a, b, t)
        })
    }

    fn log_coords(&self, p: &[f64], q: &[f64]) -> Result<Vec<f64>> {
        self.each(p, Layout::Coords, q, Layout::Coords, |s, a, b| s.log_coords(a, b))
    }

    fn exp_coords(&self, p: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        self.each(p, Layout::Coords, v, Layout::Coeffs, |s, a, b| s.exp_coords(a, b))
    }

    fn tangent_ambient_size(&self) -> usize {
        self.parts.iter().map(|p| p.tangent_ambient_size()).sum()
    }

    fn coeffs_to_ambient(&self, p: &[f64], c: &[f64]) -> Result<Vec<f64>> {
        self.each(p, Layout::Coords, c, Layout::Coeffs, |s, a, b| {
            s.coeffs_to_ambient(a, b)
        })
    }

    fn ambient_to_coeffs(&self, p: &[f64], a: &[f64]) -> Result<Vec<f64>> {
        self.each(p, Layout::Coords, a, Layout::Ambient, |s, x, y| {
            s.ambient_to_coeffs(x, y)
        })
    }

    fn ambient_inner(&self, p: &[f64], u: &[f64], v: &[f64]) -> Result<f64> {
        let ps = self.split(p, Layout::Coords);
        let us = self.split(u, Layout::Ambient);
        let vs = self.split(v, Layout::Ambient);
        let mut s = 0.0;
        for (k, part) in self.parts.iter().enumerate() {
            s += part.ambient_inner(ps[k], us[k], vs[k])?;
        }
        Ok(s)
    }

    fn ray_range(&self, p: &[f64], dir: &[f64]) -> (f64, f64) {
        let ps = self.split(p, Layout::Coords);
        let ds = self.split(dir, Layout::Coeffs);
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for (k, part) in self.parts.iter().enumerate() {
            if ds[k].iter().all(|x| *x == 0.0) {
                continue;
            }
            // Factor ranges are stated for unit factor directions.
            let n = ds[k].iter().map(|x| x * x).sum::<f64>().sqrt();
            let unit: Vec<f64> = ds[k].iter().map(|x| x / n).collect();
            let (l, h) = part.ray_range(ps[k], &unit);
            lo = lo.max(l / n);
            hi = hi.min(h / n);
        }
        (lo, hi)
    }
}
