use thiserror::Error;

/// Errors raised while reading edge streams, attribute tables and label files.
#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("{count} self-loop event(s) rejected, first at line {first_line}")]
    SelfLoop { first_line: usize, count: usize },
    #[error("line {line}: negative timestamp {value}")]
    NegativeTimestamp { line: usize, value: i64 },
    #[error("no events to bin")]
    Empty,
    #[error("resolution must be positive")]
    ZeroResolution,
    #[error("binning origin {origin} is after the first event at {t_min}")]
    OriginAfterFirstEvent { origin: u64, t_min: u64 },
    #[error("target attribute `{name}` takes {count} distinct values, expected exactly 2")]
    NonBinaryTarget { name: String, count: usize },
    #[error("target attribute `{0}` is not a column")]
    MissingTarget(String),
    #[error("unknown vertex label `{0}`")]
    UnknownVertex(String),
    #[error("change point {time} at line {line} is outside [1, {len}] or not strictly increasing")]
    BadChangePoint { line: usize, time: i64, len: usize },
    #[error("archive: {0}")]
    Archive(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WindowError {
    #[error("window size {w} outside [1, {len}]")]
    BadWindowSize { w: usize, len: usize },
    #[error("cut {cut} invalid for a sequence of length {len}")]
    BadCut { cut: usize, len: usize },
    #[error("windowing covers {windowing} steps but the sequence has {sequence}")]
    LengthMismatch { windowing: usize, sequence: usize },
    #[error("empty sequence")]
    Empty,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TaskError {
    #[error("exact Katz solve needs beta * spectral radius < 1, got {product}")]
    KatzDiverges { product: f64 },
    #[error("no labelled vertices to fit on")]
    NoKnownVertices,
    #[error("AUC undefined: only one class present")]
    SingleClass,
    #[error("batch size {batch} must be in [1, {population})")]
    BadBatchSize { batch: usize, population: usize },
    #[error("attribute data required for this task")]
    MissingAttributes,
    #[error("no scorable steps")]
    NothingToScore,
    #[error(transparent)]
    Window(#[from] WindowError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 3 observations, got {0}")]
    TooShort(usize),
    #[error("zero rank variance")]
    ZeroVariance,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot split {len} steps into {k} intervals")]
    BadSplit { len: usize, k: usize },
    #[error("task {task} is not supported by {what}")]
    Unsupported { task: String, what: String },
    #[error("dataset has no {0}")]
    MissingData(&'static str),
    #[error("score curves disagree: {0}")]
    CurveMismatch(String),
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error(transparent)]
    Window(#[from] WindowError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}
