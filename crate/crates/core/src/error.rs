use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point ({u}, {v}) is not strictly inside the unit disk")]
    InvalidPoint { u: f64, v: f64 },

    #[error("invalid polar coordinates (rho = {rho}, phi = {phi})")]
    InvalidPolar { rho: f64, phi: f64 },

    #[error("geodesic parameter {s} outside [0, {length}]")]
    OutOfRange { s: f64, length: f64 },

    #[error("metric produced Gromov product {value}; triangle inequality is violated")]
    BrokenMetric { value: f64 },

    #[error("construction depth {requested} exceeds the supported limit of {max} sectors")]
    DepthLimit { requested: usize, max: usize },

    #[error("unknown sector {0}")]
    UnknownSector(usize),

    #[error("unknown spoke {0}")]
    UnknownSpoke(usize),

    #[error("point is not contained in the comb space: {0}")]
    NotContained(String),

    #[error("portal spacing must lie in (0, 1], got {0}")]
    InvalidEpsilon(f64),

    #[error("portal graph is disconnected between the query points")]
    Disconnected,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("region contains no points")]
    EmptyRegion,

    #[error("certificate failed: {0}")]
    Certificate(String),

    #[error("spec document does not match a fresh construction with the same parameters")]
    SpecMismatch,

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
