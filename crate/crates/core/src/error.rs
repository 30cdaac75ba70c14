use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("not a bijection on 1..{n}: {detail}")]
    NotABijection { n: usize, detail: String },

    #[error("degenerate point set: {0}")]
    DegeneratePoints(String),

    #[error("bad pattern positions: {0}")]
    BadPositions(String),

    #[error("job too large: {work} units exceeds budget {budget}")]
    TooLarge { work: u128, budget: u128 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("division by zero")]
    ZeroDivision,

    #[error("square root of {0} is not representable over Q(√2,√3,√5,√7)")]
    NotRepresentable(String),

    #[error("no generator matrices for k = {k}, lambda = {lambda}")]
    MissingGenerators { k: usize, lambda: String },

    #[error("generator data is not a representation: {0}")]
    HomomorphismViolation(String),

    #[error("invalid tableau: {0}")]
    InvalidTableau(String),

    #[error("interpolant has degree {degree} > {max}")]
    DegreeViolation { degree: usize, max: usize },

    #[error("normalized limit diverges for block ({r},{s}): degree {degree}")]
    Diverges { r: usize, s: usize, degree: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("ties present in column {column}")]
    TiesPresent { column: &'static str },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the failure came from a work budget rather than bad input.
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::TooLarge { .. })
    }
}
