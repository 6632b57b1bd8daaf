//! Error type shared by all modules.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A Fock index was at or above the truncation dimension.
    #[error("photon number {n} does not fit below cutoff {dim}")]
    CutoffViolation { n: usize, dim: usize },

    /// A state lost more population to truncation than the caller allowed.
    #[error("truncated tail weight {deficit:.3e} exceeds limit {limit:.1e}; increase the cutoff")]
    TailWeight { deficit: f64, limit: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    /// Constructing an odd superposition with vanishing amplitude.
    #[error("odd coherent-state superposition with alpha = 0 has vanishing norm")]
    DegenerateNorm,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Conditioning on (or dividing by) an event of zero probability.
    #[error("zero-probability event: {0}")]
    ZeroProbability(String),

    /// Quadrature integration of the unconditional channel did not settle.
    #[error("quadrature integration residual {residual:.3e} exceeds {limit:.1e}")]
    QuadratureResidual { residual: f64, limit: f64 },

    #[error("optimizer failed to converge: {0}")]
    OptimizerFailure(String),

    /// The likelihood went down during a reconstruction step, which the
    /// fixed-point iteration forbids; indicates a numerical fault.
    #[error("log-likelihood decreased by {0:.3e} during reconstruction")]
    LikelihoodDecrease(f64),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 for validation problems, 3 for
    /// numerical non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::QuadratureResidual { .. }
            | Error::OptimizerFailure(_)
            | Error::LikelihoodDecrease(_) => 3,
            _ => 2,
        }
    }
}
