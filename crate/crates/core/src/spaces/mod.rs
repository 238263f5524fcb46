//! Concrete geodesic spaces.

mod euclidean;
mod product;
mod spd;
mod sphere;
mod wasserstein;

pub use euclidean::EuclideanSpace;
pub use product::ProductSpace;
pub use spd::{tri_index, SpdLogCholeskySpace};
pub use sphere::SphereQuadrantSpace;
pub use wasserstein::{isotonic_projection, Wasserstein1DSpace, DEFAULT_GRID};
