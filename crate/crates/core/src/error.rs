use thiserror::Error;

/// Errors produced by the solvers and loaders.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An axis name was unknown, repeated, or used in two disjoint sets.
    #[error("axis error: {0}")]
    Axis(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("schema error: {0}")]
    Schema(String),

    /// A CSV row failed to parse. `line` is 1-based and counts the header.
    #[error("line {line}: {message}")]
    Row { line: usize, message: String },

    #[error("distortion {requested:?} is infeasible (minimum achievable {minimum:?})")]
    InfeasibleDistortion { requested: Vec<f64>, minimum: Vec<f64> },

    #[error("equivocation {requested} bits exceeds the maximum achievable {maximum} bits")]
    InfeasiblePrivacy { requested: f64, maximum: f64 },

    #[error("stage ordering error: {0}")]
    Ordering(String),

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("problem too large: {0}")]
    Size(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for errors caused by an unreachable distortion or equivocation target.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Error::InfeasibleDistortion { .. } | Error::InfeasiblePrivacy { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
