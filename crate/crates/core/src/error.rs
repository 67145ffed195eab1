use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operation requires a two-mode space")]
    NotTwoMode,

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("truncation is not invariant under the mode transform (use a total-photon cutoff)")]
    TruncationNotInvariant,

    #[error("superoperator dimension {dim} exceeds the configured budget {budget}")]
    DimensionBudget { dim: usize, budget: usize },

    #[error("degenerate null space: smallest singular value {0:.3e} of the constrained generator")]
    DegenerateNullSpace(f64),

    #[error("steady-state residual {0:.3e} above tolerance")]
    Residual(f64),

    #[error("not a valid density matrix: {0}")]
    InvalidState(String),

    #[error("series did not converge after {terms} terms")]
    SeriesNonConvergence { terms: usize },

    #[error("numerical overflow: {0}")]
    Overflow(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("unphysical moments: {0}")]
    Unphysical(String),

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("cutoff ladder exhausted at n_max = {n_max} (last change {change:.3e})")]
    CutoffNonConvergence { n_max: usize, change: f64 },

    #[error("cutoff too small: {0}")]
    CutoffInsufficient(String),

    #[error("norm underflow in trajectory {0}")]
    NormUnderflow(usize),

    #[error("empty sample set")]
    EmptySamples,

    #[error("linear solver failed: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;
