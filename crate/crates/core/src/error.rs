use thiserror::Error;

/// Errors produced by the numerical routines in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("argument {value} is outside the domain of {function}")]
    Domain { function: &'static str, value: f64 },

    #[error("{function} has a pole at argument {argument}")]
    Pole { function: &'static str, argument: f64 },

    #[error("order gamma = {gamma} is outside the admissible range {range} for n = {n}")]
    OrderOutOfRange { n: usize, gamma: f64, range: String },

    #[error("unsupported sphere dimension n = {0}")]
    UnsupportedDimension(usize),

    #[error("shape mismatch: expected {expected} values, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },

    #[error("band limit {requested} exceeds what the grid resolves ({available})")]
    BandLimit { requested: usize, available: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("the input function vanishes identically")]
    ZeroFunction,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical non-convergence: {0}")]
    NonConvergence(String),

    #[error("solution field `{0}` has not been computed yet")]
    MissingField(&'static str),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of an iterative numerical method, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonConvergence(_) | Error::DegenerateFit(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
