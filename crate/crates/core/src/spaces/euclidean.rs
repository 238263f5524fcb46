use crate::error::{GeoError, Result};
use crate::metric::{
    coord_distance, dot, CurvatureClass, GeodesicSpace, SpaceCapabilities, SpaceId,
};

/// `R^D` with the standard inner product; the chart is the identity.
#[derive(Debug, Clone)]
pub struct EuclideanSpace {
    dim: usize,
    id: SpaceId,
}

impl EuclideanSpace {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(GeoError::InvalidConfig("euclidean dimension must be positive".into()));
        }
        Ok(EuclideanSpace {
            dim,
            id: SpaceId::new(format!("euclidean({dim})")),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

impl GeodesicSpace for EuclideanSpace {
    fn id(&self) -> &SpaceId {
        &self.id
    }

    fn capabilities(&self) -> SpaceCapabilities {
        SpaceCapabilities {
            dim: self.dim,
            has_chart: true,
            curvature_class: CurvatureClass::Flat,
        }
    }

    fn ambient_size(&self) -> usize {
        self.dim
    }

    fn check_membership(&self, _coords: &[f64]) -> Result<()> {
        Ok(())
    }

    fn distance_coords(&self, p: &[f64], q: &[f64]) -> f64 {
        coord_distance(p, q)
    }

    fn geodesic_coords(&self, p: &[f64], q: &[f64], t: f64) -> Result<Vec<f64>> {
        Ok(p.iter().zip(q).map(|(a, b)| a + t * (b - a)).collect())
    }

    fn log_coords(&self, p: &[f64], q: &[f64]) -> Result<Vec<f64>> {
        Ok(q.iter().zip(p).map(|(b, a)| b - a).collect())
    }

    fn exp_coords(&self, p: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        Ok(p.iter().zip(v).map(|(a, b)| a + b).collect())
    }

    fn coeffs_to_ambient(&self, _p: &[f64], c: &[f64]) -> Result<Vec<f64>> {
        Ok(c.to_vec())
    }

    fn ambient_to_coeffs(&self, _p: &[f64], a: &[f64]) -> Result<Vec<f64>> {
        Ok(a.to_vec())
    }

    fn ambient_inner(&self, _p: &[f64], u: &[f64], v: &[f64]) -> Result<f64> {
        Ok(dot(u, v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::TangentVector;

    #[test]
    fn exp_log_examples() {
        let s = EuclideanSpace::new(2).unwrap();
        let o = s.point(vec![0.0, 0.0]).unwrap();
        let v = TangentVector::new(o.clone(), vec![1.0, 2.0]);
        assert_eq!(s.exp_map(&v).unwrap().coords(), &[1.0, 2.0]);
        let p = s.point(vec![1.0, 1.0]).unwrap();
        let q = s.point(vec![3.0, 1.0]).unwrap();
        assert_eq!(s.log_map(&p, &q).unwrap().coeffs, vec![2.0, 0.0]);
        assert_eq!(s.log_map(&p, &p).unwrap().coeffs, vec![0.0, 0.0]);
    }

    #[test]
    fn frame_is_standard_basis() {
        let s = EuclideanSpace::new(3).unwrap();
        let p = s.point(vec![0.3, -1.0, 2.0]).unwrap();
        let frame = s.orthonormal_frame(&p).unwrap();
        assert_eq!(frame.len(), 3);
        for (k, v) in frame.iter().enumerate() {
            let a = s.to_ambient(v).unwrap();
            for (j, x) in a.iter().enumerate() {
                assert_eq!(*x, if j == k { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(EuclideanSpace::new(0).is_err());
    }
}
