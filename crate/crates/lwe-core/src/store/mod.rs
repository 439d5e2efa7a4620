//! Persistence: dataset loading and the append-only run log.

pub mod dataset;
pub mod runlog;

pub use dataset::{load_dataset, Dataset};
pub use runlog::{
    replay, Event, EventSink, Manifest, MemorySink, MetaKind, NullSink, ReplayedRun, RunWriter,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate case id {0}")]
    DuplicateId(String),
    #[error("line {line}: gold must be \"first\" or \"second\", got {value:?}")]
    BadGoldValue { line: usize, value: String },
    #[error("limit {limit} exceeds the {available} available cases")]
    LimitTooLarge { limit: usize, available: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("run directory already holds a log: {0}")]
    RunExists(String),
    #[error("no run found at {0}")]
    MissingRun(String),
    #[error("manifest does not match this invocation: {0}")]
    ManifestMismatch(String),
    #[error("event log corrupt at seq {seq}: {message}")]
    CorruptLog { seq: u64, message: String },
    #[error("run directory is locked by another process: {0}")]
    Locked(String),
    #[error("run is incomplete: {0}")]
    IncompleteRun(String),
}
