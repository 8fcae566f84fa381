//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on the arguments is violated (e.g. `s > t`, `q ≤ 1`).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The request lies outside the admissible domain (e.g. `|λ| > λ₀`, a
    /// tilt target outside the attainable mean range).
    #[error("outside admissible domain: {0}")]
    Domain(String),

    /// `exp(λz)` would overflow for one of the kernel atoms.
    #[error("exponential overflow for atom {atom}: exponent {exponent:.3} exceeds {limit:.1}")]
    Saturation { atom: usize, exponent: f64, limit: f64 },

    /// A characteristic integral does not converge.
    #[error("divergent integral: {0}")]
    Divergent(String),

    /// An iterative solver exhausted its budget.
    #[error("did not converge: {0}")]
    NonConvergence(String),

    /// Malformed external data (CSV import).
    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of numeric machinery (as opposed to bad arguments
    /// or malformed input); the CLI maps these to a distinct exit code.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Saturation { .. } | Error::Divergent(_) | Error::NonConvergence(_)
        )
    }
}
