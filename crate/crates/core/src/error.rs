use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("(+inf) + (-inf) is undefined")]
    OppositeInfinities,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid tolerances: {0}")]
    InvalidTolerances(String),

    #[error("function is not proper: {0}")]
    NotProper(String),

    #[error("sampled data is not convex: {0}")]
    NotConvex(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("window too small: {0}")]
    WindowTooSmall(String),

    #[error("unsupported domain shape: {0}")]
    UnsupportedDomainShape(String),

    #[error("y = {y:?} is not a solution: phi = {value}, mu = {mu}")]
    NotASolution { y: Vec<f64>, value: f64, mu: f64 },

    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
