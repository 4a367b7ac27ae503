use thiserror::Error;

/// Errors raised by assembly, factorisations, solvers and analyses.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not symmetric: {0}")]
    Symmetry(String),

    #[error("matrix is not positive definite: {0}")]
    NotSpd(String),

    #[error("matrix is singular: {0}")]
    Singular(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dense size cap exceeded: dimension {dim} > cap {cap}")]
    Cap { dim: usize, cap: usize },

    #[error("incomplete factorisation broke down: {0}")]
    Factorization(String),

    #[error("inner iteration diverged: {0}")]
    Divergence(String),

    #[error("preconditioner is not admissible: {0}")]
    Preconditioner(String),

    #[error("no convergence after {iterations} iterations: {detail}")]
    NonConvergence { iterations: usize, detail: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Dimension(format!("{what}: length {got}, expected {want}")));
    }
    Ok(())
}
