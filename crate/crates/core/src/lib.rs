//! Logistic regression with covariates in geodesic metric spaces.
//!
//! Points live in a [`GeodesicSpace`]; the link between a covariate and the
//! log odds of the response is the Alexandrov inner product
//! `h(beta; x, mu) = d(mu, x) d(mu, beta) cos angle_mu(x, beta)`.

pub mod error;
pub mod frechet;
pub mod inference;
pub mod metric;
pub mod regression;
pub mod rng;
pub mod simlab;
pub mod spaces;

pub use error::{GeoError, Result};
pub use frechet::{frechet_mean, FrechetResult, FrechetSolveOptions};
pub use metric::{
    alexandrov_angle, alexandrov_inner_product, comparison_angle, AngleLadder, ChartlessView,
    CurvatureClass, GeodesicQuery, GeodesicSpace, Point, SpaceCapabilities, SpaceId, TangentVector,
};
pub use inference::{permutation_test, PermTestResult};
pub use regression::{classify, fit, predict_prob, Dataset, FitOptions, FitResult};
