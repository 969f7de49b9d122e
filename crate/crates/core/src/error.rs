use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("node index {index} out of range for graph with {num_nodes} nodes")]
    IndexOutOfRange { index: usize, num_nodes: usize },
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("cannot batch an empty list of graphs")]
    EmptyBatch,
    #[error("invalid matching: node {0} is an endpoint of more than one contracted edge")]
    InvalidMatching(usize),
    #[error("probability {0} outside [0, 1)")]
    InvalidProbability(f64),
    #[error("batch norm needs at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("label {label} out of range for {num_classes} classes")]
    LabelOutOfRange { label: usize, num_classes: usize },
    #[error("graph {0} has no nodes")]
    EmptyGraph(usize),
    #[error("non-positive gating score {score} at node {node}")]
    NonPositiveScore { node: usize, score: f64 },
    #[error("k = {k} folds requested for {n} items")]
    TooManyFolds { k: usize, n: usize },
    #[error("class {class} has {available} labeled nodes, need {needed}")]
    ClassTooSmall { class: usize, available: usize, needed: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("{file}:{line}: {msg}")]
    Parse { file: PathBuf, line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}
