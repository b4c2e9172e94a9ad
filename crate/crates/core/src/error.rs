use thiserror::Error;

use crate::lattice::IndexVector;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown coordinate name `{0}`")]
    UnknownCoordinate(String),

    #[error("parameter `{name}` out of range: {reason}")]
    ParameterOutOfRange { name: &'static str, reason: String },

    #[error("power too low for N={n}: derived Q = {q:.6} < 1")]
    PowerTooLow { n: usize, q: f64 },

    #[error("symbol {value} at {index} lies outside the alphabet [-{bound}, {bound}]")]
    SymbolOutOfRange {
        value: i64,
        bound: i64,
        index: IndexVector,
    },

    #[error("singular channel: |det H| = {det:e} is below the threshold {threshold:e}")]
    SingularChannel { det: f64, threshold: f64 },

    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),

    #[error("candidate budget exceeded: {candidates} candidates > budget {budget}")]
    BudgetExceeded { candidates: f64, budget: u64 },

    #[error("round {round}, receiver {node}: {reason}")]
    Protocol {
        round: usize,
        node: u8,
        reason: String,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("insufficient grid points: {got} < {need}")]
    InsufficientGrid { got: usize, need: usize },

    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::ParameterOutOfRange {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn protocol(round: usize, node: u8, reason: impl Into<String>) -> Self {
        Error::Protocol {
            round,
            node,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad user input rather than runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig { .. }
                | Error::ConfigParse(_)
                | Error::ParameterOutOfRange { .. }
                | Error::PowerTooLow { .. }
                | Error::UnknownCoordinate(_)
        )
    }
}
