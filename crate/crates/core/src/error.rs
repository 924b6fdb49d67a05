use thiserror::Error;

/// Failures raised by the geometry, calculus, verification and flow layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate point: {0}")]
    DegeneratePoint(String),

    #[error("invalid space form: {0}")]
    InvalidSpaceForm(String),

    #[error("invalid grid spec: {0}")]
    InvalidSpec(String),

    #[error("map is not an immersion at node {node}: det g = {det:e}")]
    DegenerateImmersion { node: usize, det: f64 },

    #[error("metric is not positive definite at node {node}: smallest eigenvalue {min_eigenvalue:e}")]
    DegenerateMetric { node: usize, min_eigenvalue: f64 },

    #[error("field shape mismatch: {0}")]
    Shape(String),

    #[error("map is not isometric: |g - φ*h|_inf = {deviation:e} exceeds {tolerance:e}")]
    NotIsometric { deviation: f64, tolerance: f64 },

    #[error("metric mode error: {0}")]
    MetricMode(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cut-off radius {radius} too large: 2r must stay below {limit}")]
    RadiusTooLarge { radius: f64, limit: f64 },

    #[error("map is not triharmonic: sup|τ₃| = {sup_tritension:e} exceeds {tolerance:e}")]
    NotTriharmonic { sup_tritension: f64, tolerance: f64 },

    #[error("step underflow: dt = {dt:e}")]
    StepUnderflow { dt: f64 },

    #[error("unknown example map: {0}")]
    UnknownExample(String),

    #[error("bad parameters: {0}")]
    BadParams(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
