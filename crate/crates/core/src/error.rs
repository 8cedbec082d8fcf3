use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported modulation: {0}")]
    UnsupportedModulation(String),

    #[error("ragged message: {bits} bits is not a multiple of {bits_per_symbol} bits/symbol")]
    RaggedMessage { bits: usize, bits_per_symbol: usize },

    #[error("symbol index {index} out of range for a {size}-point constellation")]
    SymbolOutOfRange { index: usize, size: usize },

    #[error("unsupported beta {0}: excess bandwidth must lie in (0, 1]")]
    UnsupportedBeta(f64),

    #[error("invalid pulse parameters: {0}")]
    InvalidPulse(String),

    #[error("length mismatch: expected {expected} samples, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid preset: {0}")]
    InvalidPreset(String),

    #[error("unknown preset `{name}` (valid presets: {valid})")]
    UnknownPreset { name: String, valid: String },

    #[error("unknown channel profile `{0}` (valid profiles: harsh, medium, mild)")]
    UnknownProfile(String),

    #[error("example index {index} out of range (count {count})")]
    IndexOutOfRange { index: u64, count: u64 },

    #[error("not a dataset file: {0}")]
    BadMagic(PathBuf),

    #[error("unsupported dataset format version {found} (expected {expected})")]
    VersionMismatch { found: u8, expected: u8 },

    #[error("dataset truncated at record {0}")]
    Truncated(u64),

    #[error("malformed dataset header: {0}")]
    BadHeader(String),

    #[error("malformed record {record}: {reason}")]
    BadRecord { record: u64, reason: String },

    #[error("example count mismatch: header declares {declared}, wrote {written}")]
    CountMismatch { declared: u64, written: u64 },

    #[error("index mismatch: {0}")]
    IndexMismatch(String),

    #[error("task mismatch: expected {expected}, found {found}")]
    TaskMismatch { expected: String, found: String },

    #[error("payload mismatch for example {index}: {reason}")]
    PayloadMismatch { index: u64, reason: String },

    #[error("malformed prediction file line {line}: {reason}")]
    BadPrediction { line: usize, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
