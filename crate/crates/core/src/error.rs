use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The NCSP fixed-point iteration did not reach the requested tolerance.
    #[error("solver did not converge after {iterations} sweeps (last FOC residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// The LP backend failed for a reason other than infeasibility.
    #[error("LP solver failure: {0}")]
    Solver(String),

    #[error("size error: {what} has {actual} observations, limit is {limit}")]
    Size {
        what: &'static str,
        actual: usize,
        limit: usize,
    },

    #[error("identification error: {0}")]
    Identification(String),

    #[error("undefined statistic: {0}")]
    UndefinedStatistic(String),

    #[error("singular design matrix: {0}")]
    Singular(String),

    /// An observation that cannot enter a constraint system (e.g. F(θ) = 0).
    #[error("degenerate observation at index {index}: {reason}")]
    DegenerateObservation { index: usize, reason: String },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
        Error::Parse {
            line,
            message: e.to_string(),
        }
    }
}
