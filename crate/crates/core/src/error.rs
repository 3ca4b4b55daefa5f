use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation (e.g. a probability outside [0, 1]).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The moment functional stopped being positive definite at `degree`.
    #[error("ill-conditioned recurrence: moment sequence is numerically indefinite at degree {degree}")]
    IllConditioned { degree: usize },

    #[error("degree {requested} exceeds the supported maximum {max}")]
    Degree { requested: usize, max: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("need at least {needed} items, got {got}")]
    Size { needed: usize, got: usize },

    /// Least-squares system is rank deficient.
    #[error("singular system: numerical rank {rank} < {cols} columns")]
    Singular { rank: usize, cols: usize },

    #[error("leverage saturation at row {row}: h = {leverage}")]
    LeverageSaturation { row: usize, leverage: f64 },

    #[error("fit failure: {0}")]
    FitFailure(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("singular power-flow system in island {island}")]
    SingularIsland { island: usize },

    #[error("cascade did not reach steady state within {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by numerics rather than by malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::IllConditioned { .. }
                | Error::Singular { .. }
                | Error::LeverageSaturation { .. }
                | Error::FitFailure(_)
                | Error::SingularIsland { .. }
                | Error::NonConvergence { .. }
        )
    }
}
