use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("model has no states or no actions")]
    EmptyModel,
    #[error("row ({state}, {action}) sums to {sum}, expected 1")]
    NonStochasticRow { state: String, action: String, sum: f64 },
    #[error("transition references unknown state `{0}`")]
    DanglingState(String),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("unknown built-in model `{0}`")]
    UnknownName(String),
    #[error("option `{option}` is not proper: it may never terminate")]
    NonProperOption { option: String },
    #[error("option execution exceeded {cap} steps")]
    StepLimitExceeded { cap: u64 },
    #[error("linear system is singular or ill-conditioned (condition number {condition:e})")]
    SingularSolve { condition: f64 },
    #[error("model is not weakly communicating")]
    NotWeaklyCommunicating,
    #[error("relative value iteration did not converge within {iterations} iterations (span {span:e})")]
    NoConvergence { iterations: usize, span: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("update produced a non-finite value at pair {pair}")]
    NonFiniteUpdate { pair: usize },
    #[error("length estimate {value} at pair {pair} is not positive")]
    NonPositiveLength { pair: usize, value: f64 },
    #[error("behavior option has zero probability for the taken action")]
    ZeroBehaviorProb,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("linear program failed: {0}")]
    LinearProgram(String),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv failure: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of numerical procedures (as opposed to malformed
    /// inputs). The CLI maps these to a distinct exit code.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularSolve { .. }
                | Error::NoConvergence { .. }
                | Error::NonFiniteUpdate { .. }
                | Error::NonPositiveLength { .. }
                | Error::StepLimitExceeded { .. }
                | Error::LinearProgram(_)
        )
    }
}
