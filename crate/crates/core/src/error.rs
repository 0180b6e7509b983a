use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid Fock cutoffs {0:?}: every cutoff must be at least 2")]
    InvalidCutoffs([usize; 4]),

    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch { left: [usize; 4], right: [usize; 4] },

    #[error("non-finite parameter `{name}` = {value}")]
    NonFinite { name: &'static str, value: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("Mandel Q undefined: mean photon number is zero")]
    UndefinedMandelQ,

    #[error("singular analytic expression: {0}")]
    Singular(&'static str),

    #[error("constraint probes are not linear: deviation {deviation:e} exceeds {tolerance:e}")]
    NonLinearProbe { deviation: f64, tolerance: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

pub(crate) fn finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(LabError::NonFinite { name, value })
    }
}
