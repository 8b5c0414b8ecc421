//! Module recognition and edge pruning.
//!
//! Metanodes with more descendants than a threshold are modules. A leaf edge
//! that ends inside a collapsed module is cut into at most three pieces: a
//! hidden edge from its source up to the outermost expanded module it
//! leaves, a module edge between ports, and a hidden edge down to its target.
//! Module edges sharing both ports are merged, which is what removes most of
//! the clutter between large modules.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

use crate::error::PruneError;
use crate::frontier::Frontier;
use crate::model::{NodeIx, ProcessedGraph};

pub const DEFAULT_THRESHOLD: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModuleInfo {
    pub threshold: usize,
    /// Module metanodes with their level (hierarchy depth, top level = 1).
    pub level: BTreeMap<NodeIx, usize>,
}

impl ModuleInfo {
    pub fn is_module(&self, ix: NodeIx) -> bool {
        self.level.contains_key(&ix)
    }

    pub fn modules(&self) -> impl Iterator<Item = NodeIx> + '_ {
        self.level.keys().copied()
    }
}

pub fn recognize_modules(pg: &ProcessedGraph, threshold: usize) -> ModuleInfo {
    let tree = &pg.tree;
    let level = tree
        .metanodes()
        .filter(|&m| tree.node(m).descendant_count > threshold)
        .map(|m| (m, tree.depth(m)))
        .collect();
    ModuleInfo { threshold, level }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Left border.
    Input,
    /// Right border.
    Output,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Input => "input",
            Side::Output => "output",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PortKey {
    pub owner: NodeIx,
    pub side: Side,
    pub level: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PortKind {
    ModulePort,
    NonmodulePort,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Port {
    pub key: PortKey,
    pub kind: PortKind,
    /// Indices of the hidden edges ending at this port.
    pub hidden: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Endpoint {
    Border(NodeIx),
    Port(PortKey),
}

impl Endpoint {
    pub fn node(&self) -> NodeIx {
        match *self {
            Endpoint::Border(n) => n,
            Endpoint::Port(p) => p.owner,
        }
    }

    pub fn port(&self) -> Option<PortKey> {
        match *self {
            Endpoint::Border(_) => None,
            Endpoint::Port(p) => Some(p),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum EdgeKind {
    ModuleEdge,
    HiddenEdge,
    NormalEdge,
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeKind::ModuleEdge => "ModuleEdge",
            EdgeKind::HiddenEdge => "HiddenEdge",
            EdgeKind::NormalEdge => "NormalEdge",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    pub kind: EdgeKind,
    pub src: Endpoint,
    pub dst: Endpoint,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VisibleEdge {
    pub kind: EdgeKind,
    pub src: Endpoint,
    pub dst: Endpoint,
    /// Leaf-edge indices carried by this edge.
    pub contributors: Vec<usize>,
}

impl VisibleEdge {
    pub fn is_hidden(&self) -> bool {
        self.kind == EdgeKind::HiddenEdge
    }
}

/// How one leaf edge is drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Chain {
    /// Both ends inside the same visible node.
    Internal,
    Routed {
        src_hidden: Option<usize>,
        trunk: usize,
        dst_hidden: Option<usize>,
    },
}

impl Chain {
    /// Visible-edge indices in source-to-target order.
    pub fn edges(&self) -> Vec<usize> {
        match *self {
            Chain::Internal => Vec::new(),
            Chain::Routed {
                src_hidden,
                trunk,
                dst_hidden,
            } => src_hidden
                .into_iter()
                .chain(std::iter::once(trunk))
                .chain(dst_hidden)
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PrunedEdges {
    pub edges: Vec<VisibleEdge>,
    pub ports: BTreeMap<PortKey, Port>,
    /// One chain per leaf edge, indexed like `ProcessedGraph::leaf_edges`.
    pub chains: Vec<Chain>,
}

impl PrunedEdges {
    pub fn reveal_hidden(&self, key: &PortKey) -> Result<&[usize], PruneError> {
        self.ports
            .get(key)
            .map(|p| p.hidden.as_slice())
            .ok_or_else(|| PruneError::UnknownPort(format!("{key:?}")))
    }
}

fn port(owner: NodeIx, side: Side, level: usize) -> Endpoint {
    Endpoint::Port(PortKey { owner, side, level })
}

/// The outermost expanded module strictly between `node` and `lca`.
fn outer_module(
    pg: &ProcessedGraph,
    modules: &ModuleInfo,
    node: NodeIx,
    lca: NodeIx,
) -> Option<NodeIx> {
    pg.tree
        .ancestors(node)
        .take_while(|&a| a != lca)
        .filter(|&a| modules.is_module(a))
        .last()
}

/// One side of a routed edge: the trunk endpoint plus an optional hidden
/// segment between the visible node and the trunk.
fn anchor(
    pg: &ProcessedGraph,
    frontier: &Frontier,
    modules: &ModuleInfo,
    node: NodeIx,
    lca: NodeIx,
    side: Side,
) -> (Endpoint, Option<Endpoint>) {
    let own_module = modules.is_module(node) && !frontier.is_expanded(node);
    match outer_module(pg, modules, node, lca) {
        Some(m) => {
            let level = modules.level[&m];
            let near = if own_module {
                port(node, side, modules.level[&node])
            } else {
                port(node, side, level)
            };
            (port(m, side, level), Some(near))
        }
        None if own_module => (port(node, side, modules.level[&node]), None),
        None => (Endpoint::Border(node), None),
    }
}

/// Decomposes a leaf edge into at most three segments, source first. Empty
/// when both ends fall inside one visible node.
pub fn slice_edge(
    pg: &ProcessedGraph,
    leaf_edge: usize,
    frontier: &Frontier,
    modules: &ModuleInfo,
) -> Result<Vec<Segment>, PruneError> {
    let e = pg.leaf_edges[leaf_edge];
    let resolve = |ix: NodeIx| {
        frontier
            .rep(ix)
            .ok_or_else(|| PruneError::UnresolvedEndpoint(pg.tree.id(ix).to_string()))
    };
    let (u, v) = (resolve(e.src)?, resolve(e.dst)?);
    if u == v {
        return Ok(Vec::new());
    }
    let collapsed_module = |n: NodeIx| modules.is_module(n) && !frontier.is_expanded(n);
    if !collapsed_module(u) && !collapsed_module(v) {
        return Ok(vec![Segment {
            kind: EdgeKind::NormalEdge,
            src: Endpoint::Border(u),
            dst: Endpoint::Border(v),
        }]);
    }
    let lca = pg.tree.lca(u, v);
    let (src, src_near) = anchor(pg, frontier, modules, u, lca, Side::Output);
    let (dst, dst_near) = anchor(pg, frontier, modules, v, lca, Side::Input);
    let mut out = Vec::with_capacity(3);
    if let Some(near) = src_near {
        out.push(Segment {
            kind: EdgeKind::HiddenEdge,
            src: near,
            dst: src,
        });
    }
    out.push(Segment {
        kind: EdgeKind::ModuleEdge,
        src,
        dst,
    });
    if let Some(near) = dst_near {
        out.push(Segment {
            kind: EdgeKind::HiddenEdge,
            src: dst,
            dst: near,
        });
    }
    Ok(out)
}

/// Routes every leaf edge for the given frontier and merges segments that
/// share kind and both endpoints.
pub fn prune_edges(
    pg: &ProcessedGraph,
    frontier: &Frontier,
    modules: &ModuleInfo,
) -> Result<PrunedEdges, PruneError> {
    let mut out = PrunedEdges::default();
    let mut index: HashMap<(EdgeKind, Endpoint, Endpoint), usize> = HashMap::new();
    for le in 0..pg.leaf_edges.len() {
        let segments = slice_edge(pg, le, frontier, modules)?;
        if segments.is_empty() {
            out.chains.push(Chain::Internal);
            continue;
        }
        let mut ids = Vec::with_capacity(segments.len());
        for seg in &segments {
            let id = *index.entry((seg.kind, seg.src, seg.dst)).or_insert_with(|| {
                out.edges.push(VisibleEdge {
                    kind: seg.kind,
                    src: seg.src,
                    dst: seg.dst,
                    contributors: Vec::new(),
                });
                out.edges.len() - 1
            });
            out.edges[id].contributors.push(le);
            ids.push(id);
        }
        let hidden_src = segments[0].kind == EdgeKind::HiddenEdge;
        let hidden_dst = segments.len() > 1 && segments[segments.len() - 1].kind == EdgeKind::HiddenEdge;
        let trunk = if hidden_src { ids[1] } else { ids[0] };
        out.chains.push(Chain::Routed {
            src_hidden: hidden_src.then(|| ids[0]),
            trunk,
            dst_hidden: hidden_dst.then(|| ids[ids.len() - 1]),
        });
    }
    for (i, e) in out.edges.iter().enumerate() {
        for end in [e.src, e.dst] {
            if let Endpoint::Port(key) = end {
                let kind = if modules.is_module(key.owner) && modules.level[&key.owner] == key.level {
                    PortKind::ModulePort
                } else {
                    PortKind::NonmodulePort
                };
                let p = out.ports.entry(key).or_insert_with(|| Port {
                    key,
                    kind,
                    hidden: Vec::new(),
                });
                if e.is_hidden() {
                    p.hidden.push(i);
                }
            }
        }
    }
    Ok(out)
}

/// Port identifier used in the HTTP API: `owner:side:level`.
pub fn port_id(pg: &ProcessedGraph, key: &PortKey) -> String {
    format!("{}:{}:{}", pg.tree.id(key.owner), key.side.as_str(), key.level)
}

pub fn parse_port_id(pg: &ProcessedGraph, id: &str) -> Result<PortKey, PruneError> {
    let bad = || PruneError::UnknownPort(id.to_owned());
    let mut parts = id.rsplitn(3, ':');
    let level = parts.next().and_then(|l| l.parse().ok()).ok_or_else(bad)?;
    let side = match parts.next() {
        Some("input") => Side::Input,
        Some("output") => Side::Output,
        _ => return Err(bad()),
    };
    let owner = parts.next().and_then(|o| pg.tree.get(o)).ok_or_else(bad)?;
    Ok(PortKey { owner, side, level })
}

/// Distinct frontier-level edges before any pruning: the unsimplified count.
pub fn quotient_edges(pg: &ProcessedGraph, frontier: &Frontier) -> BTreeSet<(NodeIx, NodeIx)> {
    pg.leaf_edges
        .iter()
        .filter_map(|e| {
            let (u, v) = (frontier.rep(e.src)?, frontier.rep(e.dst)?);
            (u != v).then_some((u, v))
        })
        .collect()
}
