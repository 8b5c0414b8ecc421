//! Graph definition files.
//!
//! The on-disk format is UTF-8 JSON:
//!
//! ```json
//! {
//!   "format_version": "1",
//!   "name": "lenet",
//!   "nodes": [{"name": "backbone/Conv1/Conv2D-op201", "kind": "operation",
//!              "op_type": "Conv2D", "attrs": {"precision": "FP32"}}],
//!   "edges": [{"src": "...", "dst": "..."}]
//! }
//! ```
//!
//! `op_type` is required for operations and forbidden otherwise. Unknown
//! fields are rejected; `attrs` keys are free-form strings.

use serde::{Deserialize, Serialize};

use crate::error::IngestError;
use crate::model::{Attrs, NodeId, NodeKind, RawEdge, RawGraph, RawNode};

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub format_version: String,
    pub name: String,
    pub nodes: Vec<FileNode>,
    pub edges: Vec<FileEdge>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileNodeKind {
    Operation,
    Constant,
    Parameter,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileNode {
    pub name: String,
    pub kind: FileNodeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub op_type: Option<String>,
    #[serde(default, skip_serializing_if = "Attrs::is_empty")]
    pub attrs: Attrs,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileEdge {
    pub src: String,
    pub dst: String,
}

pub fn parse_graph_file(bytes: &[u8]) -> Result<RawGraph, IngestError> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    let file: GraphFile = serde_path_to_error::deserialize(&mut de).map_err(|err| {
        let path = err.path().to_string();
        let inner = err.into_inner();
        classify(&path, inner)
    })?;
    de.end().map_err(|e| classify(".", e))?;
    let graph = file_to_raw(file)?;
    graph.validate()?;
    Ok(graph)
}

fn classify(path: &str, err: serde_json::Error) -> IngestError {
    use serde_json::error::Category;
    match err.classify() {
        Category::Data => {
            let message = err.to_string();
            // serde reports missing/unknown fields at the enclosing object.
            let named = ["missing field `", "unknown field `"]
                .iter()
                .find_map(|p| message.split(p).nth(1))
                .and_then(|rest| rest.split('`').next());
            let field = match (named, path) {
                (Some(f), p) if p == f || p.ends_with(&format!(".{f}")) => p.to_owned(),
                (Some(f), "." | "") => f.to_owned(),
                (Some(f), p) => format!("{p}.{f}"),
                (None, p) => p.to_owned(),
            };
            IngestError::Schema {
                field,
                message: strip_position(&message),
            }
        }
        _ => IngestError::Syntax {
            line: err.line(),
            column: err.column(),
            message: strip_position(&err.to_string()),
        },
    }
}

fn strip_position(message: &str) -> String {
    match message.rfind(" at line ") {
        Some(i) => message[..i].to_owned(),
        None => message.to_owned(),
    }
}

fn schema(field: String, message: &str) -> IngestError {
    IngestError::Schema {
        field,
        message: message.to_owned(),
    }
}

fn file_to_raw(file: GraphFile) -> Result<RawGraph, IngestError> {
    if file.format_version != FORMAT_VERSION {
        return Err(schema(
            "format_version".into(),
            "unsupported format version, expected \"1\"",
        ));
    }
    let mut graph = RawGraph::new(file.name);
    for (i, node) in file.nodes.into_iter().enumerate() {
        let id = NodeId::new(node.name)
            .map_err(|_| schema(format!("nodes[{i}].name"), "empty path segment"))?;
        let kind = match (node.kind, node.op_type) {
            (FileNodeKind::Operation, Some(op_type)) => NodeKind::Operation { op_type },
            (FileNodeKind::Operation, None) => {
                return Err(schema(
                    format!("nodes[{i}].op_type"),
                    "operation nodes require op_type",
                ))
            }
            (_, Some(_)) => {
                return Err(schema(
                    format!("nodes[{i}].op_type"),
                    "op_type is only allowed on operation nodes",
                ))
            }
            (FileNodeKind::Constant, None) => NodeKind::Constant,
            (FileNodeKind::Parameter, None) => NodeKind::Parameter,
        };
        graph.nodes.push(RawNode {
            id,
            kind,
            attrs: node.attrs,
        });
    }
    for (i, edge) in file.edges.into_iter().enumerate() {
        let src = NodeId::new(edge.src)
            .map_err(|_| schema(format!("edges[{i}].src"), "empty path segment"))?;
        let dst = NodeId::new(edge.dst)
            .map_err(|_| schema(format!("edges[{i}].dst"), "empty path segment"))?;
        graph.edges.push(RawEdge { src, dst });
    }
    Ok(graph)
}

/// Serializes a graph with nodes sorted by path and edges by `(src, dst)`.
pub fn emit_graph_file(raw: &RawGraph) -> Vec<u8> {
    let canonical = raw.canonical();
    let file = GraphFile {
        format_version: FORMAT_VERSION.to_owned(),
        name: canonical.name,
        nodes: canonical
            .nodes
            .into_iter()
            .map(|n| {
                let (kind, op_type) = match n.kind {
                    NodeKind::Operation { op_type } => (FileNodeKind::Operation, Some(op_type)),
                    NodeKind::Constant => (FileNodeKind::Constant, None),
                    NodeKind::Parameter | NodeKind::Meta => (FileNodeKind::Parameter, None),
                };
                FileNode {
                    name: n.id.into(),
                    kind,
                    op_type,
                    attrs: n.attrs,
                }
            })
            .collect(),
        edges: canonical
            .edges
            .into_iter()
            .map(|e| FileEdge {
                src: e.src.into(),
                dst: e.dst.into(),
            })
            .collect(),
    };
    let mut out = serde_json::to_vec_pretty(&file).expect("graph file serializes");
    out.push(b'\n');
    out
}
