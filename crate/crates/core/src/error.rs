use thiserror::Error;

/// Errors raised by the solver stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("value out of bounds: {0}")]
    Bounds(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("evaluation error at `{node}`: {reason}")]
    Eval { node: String, reason: String },

    #[error("parse error in {field}: {message}")]
    Parse { field: String, message: String },

    #[error("inversion failed: {0}")]
    Inversion(String),

    #[error("assembly failed at {location}: {reason}")]
    Assembly { location: String, reason: String },

    #[error("linear solve did not converge after {iterations} iterations (relative residual {residual:e})")]
    LinearSolve { iterations: usize, residual: f64 },

    #[error("Newton iteration stagnated; residual history {history:?}")]
    NonlinearSolve { history: Vec<f64> },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
