use thiserror::Error;

/// Errors surfaced by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("argument error: {0}")]
    Argument(String),

    #[error("degree budget exceeded: {0}")]
    Degree(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("outside domain: {0}")]
    Domain(String),

    #[error("unknown fixture: {0}")]
    Lookup(String),

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("membership violation: {0}")]
    Membership(String),

    #[error("no convergence after {iters} iterations (residual {residual:.3e})")]
    NonConvergence {
        iters: usize,
        residual: f64,
        /// Best iterate seen, so callers can inspect or warm-start from it.
        best: Vec<f64>,
    },

    #[error("verification failed at leg `{leg}`: {detail}")]
    Verification { leg: String, detail: String },

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
