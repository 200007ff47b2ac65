use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("temperature must be strictly positive, got {0}")]
    NonPositiveTemperature(f64),

    #[error("unknown unit tag `{0}`")]
    UnknownUnit(String),

    #[error("drift matrix is not stable (max real part of spectrum {max_real:e})")]
    Unstable { max_real: f64 },

    #[error("eigenvalue iteration did not converge")]
    EigenFailure,

    #[error("singular linear system in {0}")]
    Singular(&'static str),

    #[error("{what} residual {residual:e} exceeds tolerance {tolerance:e}")]
    Residual {
        what: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error("covariance is not positive definite")]
    NotPositiveDefinite,

    #[error("non-positive variance {0:e}")]
    NonPositiveVariance(f64),

    #[error("mode subset is empty")]
    EmptySubset,

    #[error("mode index {index} out of range for {n_modes} modes")]
    ModeOutOfRange { index: usize, n_modes: usize },

    #[error("operation requires oscillator modes only; mode {0} is an inverted barrier")]
    BarrierModePresent(usize),

    #[error("time grid must be strictly increasing and non-negative")]
    BadTimeGrid,

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
}

impl Error {
    /// Errors that come from the numerics rather than from the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Unstable { .. }
                | Error::EigenFailure
                | Error::Singular(_)
                | Error::Residual { .. }
                | Error::NonFinite(_)
        )
    }
}
