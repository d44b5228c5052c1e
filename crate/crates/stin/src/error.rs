use thiserror::Error;

/// Crate-wide error type.
///
/// The variants map onto the CLI exit codes: `Config` exits 2,
/// `NonConvergence` exits 1, `Validation` exits 3.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A scenario or parameter failed an invariant before any computation.
    #[error("config error: {0}")]
    Config(String),

    /// Adaptive quadrature exhausted its subdivision budget above tolerance.
    #[error(
        "quadrature failed to converge in {context}: \
         error estimate {error_estimate:.3e} exceeds tolerance {tolerance:.3e}"
    )]
    NonConvergence {
        context: String,
        error_estimate: f64,
        tolerance: f64,
    },

    /// A cross-check between independent computation routes failed.
    #[error("validation failure: {0}")]
    Validation(String),

    /// A requested draw would exceed the expected-count guard.
    #[error("expected node count {expected:.3e} exceeds the sampling guard {guard:.3e}")]
    SampleGuard { expected: f64, guard: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code the CLI maps this error to.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::NonConvergence { .. } => 1,
            Error::Validation(_) => 3,
            Error::SampleGuard { .. } => 2,
        }
    }
}
