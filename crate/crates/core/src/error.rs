use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// Input violates a stated invariant; the message names it.
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A reduced state (or filter target) is too close to singular to invert.
    #[error("singular reduced state: smallest eigenvalue {min_eigenvalue:e} below cutoff {cutoff:e}")]
    SingularReducedState { min_eigenvalue: f64, cutoff: f64 },

    /// An iterative method stopped without reaching its tolerance.
    ///
    /// `bounds` carries a certified bracket when the method produces one.
    #[error("{method} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        method: &'static str,
        iterations: usize,
        residual: f64,
        bounds: Option<(f64, f64)>,
    },

    #[error("precondition not met: {0}")]
    Precondition(String),

    #[error("no threshold: criterion verdict is constant on [{lo}, {hi}]")]
    NoThreshold { lo: f64, hi: f64 },

    #[error("ambiguous threshold: verdict flips {flips} times on the coarse scan")]
    Ambiguous { flips: usize },
}

impl Error {
    /// True for failures of a numerical method, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularReducedState { .. }
                | Error::NoConvergence { .. }
                | Error::NoThreshold { .. }
                | Error::Ambiguous { .. }
        )
    }
}
