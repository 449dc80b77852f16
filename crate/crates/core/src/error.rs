use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-positive field value {value:e} at {location}")]
    NonPositive { value: f64, location: String },

    #[error("argument outside the admissible cone (margin {margin:e})")]
    DomainViolation { margin: f64 },

    #[error("point {0} lies outside the field's domain")]
    OutsideDomain(String),

    #[error("evaluation at the pole of an inversion")]
    InversionPole,

    #[error("matrix is not symmetric (defect {defect:e})")]
    Asymmetric { defect: f64 },

    #[error("cone boundary reached at r = {r} (margin {margin:e})")]
    ConeBoundary { r: f64, margin: f64 },

    #[error("positivity lost at r = {r}")]
    PositivityLoss { r: f64 },

    #[error("step size underflow at r = {r}")]
    StepUnderflow { r: f64 },

    #[error(
        "Newton iteration did not converge in {iterations} iterations (residual {residual:e})"
    )]
    MaxIterations { iterations: usize, residual: f64 },

    #[error("no admissible Newton step (residual {residual:e})")]
    NoAdmissibleStep { residual: f64 },

    #[error("singular Jacobian at row {row}")]
    SingularJacobian { row: usize },

    #[error("continuation failed; last converged t = {last_good_t:?}")]
    PathFailure { last_good_t: Option<f64> },

    #[error("I/O error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn fmt_point(x: &[f64]) -> String {
    let parts: Vec<String> = x.iter().map(|v| format!("{v:.6e}")).collect();
    format!("({})", parts.join(", "))
}
