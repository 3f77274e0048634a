use std::io;

/// Errors raised anywhere in the pipeline.
///
/// The CLI maps `Config` and `Argument` to exit code 2 and everything else to
/// exit code 3 (I/O excepted, which is also reported as 3).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("degenerate triangle {triangle}: area {area:e} below 1e-14 * h_K^2")]
    Degenerate { triangle: usize, area: f64 },
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by the caller's input rather than the numerics.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Argument(_) | Error::Parse { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
