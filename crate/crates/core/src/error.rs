use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("support of the increment law is not the whole plane; regularize the model first")]
    NotFullPlane,

    #[error("model is not centrally symmetric")]
    NotSymmetric,

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("value {value} lies outside the effective domain of the rate function")]
    OutsideDomain { value: f64 },

    #[error("area {a} is outside the attainable range (a_max = {a_max})")]
    OutOfRange { a: f64, a_max: f64 },

    #[error("no (alpha, direction, orientation) candidate found for area {a}")]
    NoCandidate { a: f64 },

    #[error("polygonal line is not closed")]
    NotClosed,
}

impl Error {
    /// Stable machine-readable tag, used in the CLI's JSON error payload.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidModel(_) => "InvalidModel",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::NotFullPlane => "NotFullPlane",
            Error::NotSymmetric => "NotSymmetric",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::OutsideDomain { .. } => "OutsideDomain",
            Error::OutOfRange { .. } => "OutOfRange",
            Error::NoCandidate { .. } => "NoCandidate",
            Error::NotClosed => "NotClosed",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
