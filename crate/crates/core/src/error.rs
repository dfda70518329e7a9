use thiserror::Error;

/// Errors raised across ingestion, training, prediction and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("position ({lat}, {lon}) outside grid bounds")]
    OutOfBounds { lat: f64, lon: f64 },

    #[error("invalid coordinate ({lat}, {lon})")]
    InvalidCoord { lat: f64, lon: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("bearing undefined between identical points")]
    UndefinedBearing,

    #[error("malformed line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },

    #[error("line {line}: training record without destination/arrival labels")]
    MissingLabel { line: usize },

    #[error("duplicate port {0}")]
    DuplicatePort(String),

    #[error("unknown port {0}")]
    UnknownPort(String),

    #[error("port registry is empty")]
    EmptyRegistry,

    #[error("no destination model has been trained")]
    NoModel,

    #[error("no arrival-time statistics for destination {0}")]
    NoEtaModel(String),

    #[error("arrival label {arrival} precedes record timestamp {timestamp}")]
    NegativeRemaining { timestamp: i64, arrival: i64 },

    #[error("ship speed is zero")]
    ZeroSpeed,

    #[error("trip ended without any reported destination")]
    MissingPrediction,

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("could not place {placed} of {wanted} ports with the requested separation")]
    PlacementFailure { placed: usize, wanted: usize },

    #[error("config: {0}")]
    Config(String),

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
