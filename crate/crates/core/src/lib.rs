//! Simplification engine for hierarchical computational graphs.
//!
//! A graph definition file is parsed into a [`RawGraph`], grouped by
//! namespace into a [`ProcessedGraph`], and turned into a visible graph for
//! an expansion state: grouping-induced cycles are optionally split away,
//! cross-module edges are routed through ports, and repeated sibling
//! subgraphs are stacked into piles. The result can be laid out and
//! exported as SVG.

pub mod concept;
pub mod error;
pub mod frontier;
pub mod ingest;
pub mod iso;
pub mod layout;
pub mod model;
pub mod prune;
pub mod synth;
pub mod visible;

pub use error::{IngestError, LayoutError, ModelError, PruneError, SessionError};
pub use frontier::Frontier;
pub use ingest::{emit_graph_file, parse_graph_file};
pub use model::{
    build_hierarchy, HierarchyTree, LayerClass, NodeId, NodeIx, NodeKind, ProcessedGraph, RawEdge,
    RawGraph, RawNode,
};
pub use visible::{Session, SessionOptions, VisibleGraph};
