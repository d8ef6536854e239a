use thiserror::Error;

/// Errors raised by the geometry routines.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum FinslerError {
    #[error("point {coords:?} is outside the patch domain ({reason})")]
    Domain { coords: Vec<f64>, reason: String },

    #[error("non-finite value encountered: {0}")]
    Numeric(String),

    #[error("singular configuration: {0}")]
    Singularity(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("step size underflow at t = {t} (stiff or singular geodesic equation)")]
    StepUnderflow { t: f64 },

    #[error("geodesic left the patch at t = {t} before reaching t = {target}")]
    PatchExit { t: f64, target: f64 },

    #[error("exponential map inversion failed after {iterations} iterations (residual {residual:e})")]
    InversionFailure { iterations: usize, residual: f64 },

    #[error("distance chart construction failed at base point {index}: {reason}")]
    ChartConstruction { index: usize, reason: String },

    #[error("chart evaluation failed for base point {index}: {reason}")]
    ChartEvaluation { index: usize, reason: String },

    #[error("target lies outside the certified chart neighbourhood: {0}")]
    OutsideCertifiedNeighbourhood(String),

    #[error("linear map does not preserve the Finsler norm at the seed point (defect {defect:e})")]
    NotAnIsometrySeed { defect: f64 },

    #[error("map is not distance preserving: rho({a:?}, {b:?}) = {source_distance}, image distance {image_distance}")]
    NotDistancePreserving {
        a: Vec<f64>,
        b: Vec<f64>,
        source_distance: f64,
        image_distance: f64,
    },

    #[error("finite-difference derivative of the map did not converge: {0}")]
    NonSmoothMap(String),

    #[error("oracle failure: {0}")]
    Oracle(String),

    #[error("metric is not reversible (witness F(y) = {forward}, F(-y) = {backward})")]
    NonReversible { forward: f64, backward: f64 },

    #[error("not a submetry at scale {scale}: {reason}")]
    NotASubmetry { scale: f64, reason: String },

    #[error("table I/O: {0}")]
    Table(String),
}

pub type Result<T> = std::result::Result<T, FinslerError>;

impl FinslerError {
    pub fn domain(coords: &[f64], reason: impl Into<String>) -> Self {
        FinslerError::Domain {
            coords: coords.to_vec(),
            reason: reason.into(),
        }
    }

    /// True for failures caused by leaving the chart domain; integrators use
    /// this to shrink the step instead of aborting.
    pub fn is_domain(&self) -> bool {
        matches!(self, FinslerError::Domain { .. })
    }
}
