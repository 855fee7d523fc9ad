use thiserror::Error;

/// Errors raised by the numerical and algebraic layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("metric is not positive definite at s = {s}: eigenvalues ({tangential}, {radial})")]
    NonPositiveMetric { s: f64, tangential: f64, radial: f64 },
    #[error("derivative of order {order} unavailable: {reason}")]
    DerivativeUnavailable { order: usize, reason: String },
    #[error("s = {s} outside profile domain [{lo}, {hi}]")]
    OutsideDomain { s: f64, lo: f64, hi: f64 },
    #[error("radius {radius} must exceed {minimum}")]
    RadiusTooSmall { radius: f64, minimum: f64 },
    #[error("extrapolation unstable: spread {spread:e} exceeds {limit:e}")]
    ExtrapolationUnstable { spread: f64, limit: f64 },
    #[error("asymptotic fit ill-conditioned: {0}")]
    FitIllConditioned(String),
    #[error("tail too short for asymptotic fit: {0}")]
    TailTooShort(String),
    #[error("ODE solve failed: {0}")]
    OdeSolveFailure(String),
    #[error("normalization failed: {0}")]
    NormalizationFailure(String),
    #[error("incompatible dimensions: {0}")]
    IncompatibleDimensions(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),
    #[error("singular operator: smallest pivot {pivot:e}")]
    SingularOperator { pivot: f64 },
    #[error("mesh too coarse: {0}")]
    MeshTooCoarse(String),
    #[error("divergence detected: {0}")]
    DivergenceDetected(String),
    #[error("boundary conditions conflict: {0}")]
    BoundaryConditionConflict(String),
    #[error("target {target} is below base mass {base}")]
    TargetBelowBase { base: f64, target: f64 },
    #[error("degenerate threshold: epsilon0 = {0}")]
    DegenerateThreshold(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
