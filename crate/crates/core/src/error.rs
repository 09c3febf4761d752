use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised while loading data or evaluating the models.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("duplicate id `{id}` at line {line}")]
    DuplicateId { id: String, line: u64 },

    #[error("{0} contains no data rows")]
    Empty(&'static str),

    #[error("no population mass: {0}")]
    NoMass(String),

    #[error("degenerate input: {0}")]
    Degenerate(&'static str),

    #[error("invalid model spec: {0}")]
    InvalidSpec(String),

    #[error("invalid resample plan: {0}")]
    InvalidPlan(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("unmatched ids between settlements and tallies: {}", .0.join(", "))]
    Linkage(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used to pick a process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Data,
    Config,
    Numeric,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Degenerate(_) => ErrorClass::Numeric,
            Error::InvalidSpec(_) | Error::InvalidPlan(_) | Error::Config(_) => ErrorClass::Config,
            _ => ErrorClass::Data,
        }
    }
}
