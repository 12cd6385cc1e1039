use std::path::PathBuf;

/// Errors raised anywhere in the laboratory.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("eigensolver did not converge; best Rayleigh quotients {rayleigh:?}")]
    EigenNotConverged { rayleigh: Vec<f64> },

    #[error("factorization broke down: zero pivot at row {0}")]
    ZeroPivot(usize),

    #[error("non-finite value: {0}")]
    Overflow(String),

    #[error("iterate lost its sign change after {iterations} iterations")]
    LostSignChange { iterations: usize },

    #[error("nodal solve failed after {iterations} iterations ({reason}); grad_norm {grad_norm:.3e}, residual {residual:.3e}")]
    SolveFailed {
        reason: &'static str,
        iterations: usize,
        grad_norm: f64,
        residual: f64,
        last_iterate: Box<crate::geometry::Field>,
    },

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
