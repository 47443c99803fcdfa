use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("incomplete strategy: player {player} has no answer for question {question}")]
    IncompleteStrategy { player: usize, question: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("budget exceeded: {needed} terms needed, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("not a projective measurement: {0}")]
    NonProjective(String),

    #[error("strategy is not perfect: winning probability {value} (residual {residual:.3e})")]
    NotPerfect { value: f64, residual: f64 },

    #[error("degenerate unitary for player {player}, question {question}: no nonzero entry")]
    DegenerateUnitary { player: usize, question: usize },

    #[error("angle {value} cannot be snapped to a rational with denominator <= {max_den}")]
    SnapFailed { value: f64, max_den: u64 },

    #[error("promise violated: {0}")]
    PromiseViolated(String),

    #[error("inputs are disconnected: {first} and {second} lie in different components")]
    Disconnected { first: String, second: String },

    #[error("characteristic {p} is smaller than required {required}")]
    Characteristic { p: u64, required: u64 },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("infeasible vector solution: {0}")]
    Infeasible(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
