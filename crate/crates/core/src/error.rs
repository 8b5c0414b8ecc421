use thiserror::Error;

/// Violations of the raw/processed graph invariants.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("invalid node path {0:?}")]
    InvalidPath(String),
    #[error("duplicate node path {0}")]
    DuplicatePath(String),
    #[error("edge {src} -> {dst} references missing node {missing}")]
    DanglingEdge {
        src: String,
        dst: String,
        missing: String,
    },
    #[error("edge {src} -> {dst} connects two data nodes")]
    DataToDataEdge { src: String, dst: String },
    #[error("edge {src} -> {dst} targets a data node")]
    EdgeIntoDataNode { src: String, dst: String },
    #[error("duplicate edge {src} -> {dst}")]
    DuplicateEdge { src: String, dst: String },
    #[error("leaf {0} is also used as a namespace")]
    PathConflict(String),
    #[error("raw node {0} has kind meta; metanodes are derived from namespaces")]
    MetaLeaf(String),
    #[error("{0} is not a metanode")]
    NotAMetaNode(String),
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("invalid frontier: {0}")]
    InvalidFrontier(String),
}

/// Failures while reading a graph definition file.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IngestError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error at {field}: {message}")]
    Schema { field: String, message: String },
    #[error(transparent)]
    Semantic(#[from] ModelError),
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PruneError {
    #[error("edge endpoint {0} does not resolve to a visible node")]
    UnresolvedEndpoint(String),
    #[error("unknown port {0}")]
    UnknownPort(String),
}

/// Errors raised by session operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("{0} is not a metanode")]
    NotAMetaNode(String),
    #[error("{0} cannot be expanded while an ancestor is collapsed")]
    NotExpandable(String),
    #[error("the root cannot be ungrouped")]
    UngroupRoot,
    #[error("nothing to undo")]
    NothingToUndo,
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error(transparent)]
    Prune(#[from] PruneError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LayoutError {
    #[error("container {0} has a cycle and cycle breaking is disabled")]
    CycleWithoutFeedbackSet(String),
    #[error("invalid layout parameters: {0}")]
    InvalidParams(String),
}
