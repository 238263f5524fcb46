use thiserror::Error;

/// Errors raised by geometry, estimation and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point does not belong to {space}: {reason}")]
    NotInSpace { space: String, reason: String },

    #[error("point belongs to {found}, expected {expected}")]
    SpaceMismatch { expected: String, found: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("{name} = {value} is outside the valid range {bound}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        bound: String,
    },

    #[error("geodesic between the given points is not unique")]
    NonUniqueGeodesic,

    #[error("result leaves the domain of {space}: {reason}")]
    OutOfDomain { space: String, reason: String },

    #[error("{0} has no exponential/logarithm chart")]
    NoChart(String),

    #[error("angle limit did not converge: last iterate {last}, previous {previous}")]
    NumericalLimit { last: f64, previous: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, GeoError>;
