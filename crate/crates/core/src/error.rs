use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("check skipped: size {size} exceeds limit {limit}")]
    Unchecked { size: usize, limit: usize },

    #[error("partition pair is not certified as a lifting partition")]
    Uncertified,

    #[error("point is infeasible (max violation {violation:e})")]
    Infeasible { violation: f64 },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("instance too large: n = {n}, limit {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("{file}: {message}")]
    Parse { file: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_check(ok: bool, what: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Dimension(what()))
    }
}
