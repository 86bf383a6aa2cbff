use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown design point {index} (support size {support})")]
    UnknownDesignPoint { index: usize, support: usize },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("dataset of size {0} cannot be split into three equal blocks")]
    NotDivisibleByThree(usize),

    #[error("member budget exceeded: {required} members required, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("function class `{0}` is not enumerable")]
    NotEnumerable(&'static str),

    #[error("cell index {index} out of range (partition has {cells} cells)")]
    CellOutOfRange { index: usize, cells: usize },

    #[error("integral diverges at 0")]
    DivergentIntegral,

    #[error("requested misspecification {requested} unreachable; maximum achievable is {max}")]
    DeltaUnreachable { requested: f64, max: f64 },

    #[error("slope fit needs at least 3 positive points, got {0}")]
    TooFewPoints(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
