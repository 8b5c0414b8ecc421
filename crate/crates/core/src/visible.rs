//! Sessions and visible graphs.
//!
//! A [`Session`] holds one processed graph, the user's expansion state and
//! the view options. [`Session::derive_visible`] runs the pipeline: the
//! optional concept-graph transform, the frontier of the expansion state,
//! edge pruning, isomorphic stacking and element counting.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::concept::{build_concept_graph, CycleReport};
use crate::error::{PruneError, SessionError};
use crate::frontier::Frontier;
use crate::iso::{detect_iso_groups, stack, IsoGroup, Stacked, DEFAULT_MIN_REPEAT};
use crate::model::{Attrs, LayerClass, LeafEntry, NodeIx, NodeKind, ProcessedGraph};
use crate::prune::{
    parse_port_id, port_id, prune_edges, quotient_edges, recognize_modules, Chain, EdgeKind,
    Endpoint, ModuleInfo, PortKey, PortKind, DEFAULT_THRESHOLD,
};

/// Paths reported by [`Session::find_path`].
pub const MAX_PATHS: usize = 10;

/// Partial paths explored before path enumeration gives up on finding more.
const PATH_EXPANSION_CAP: usize = 20_000;

pub const MIN_QUERY_LEN: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionOptions {
    pub cgm: bool,
    pub stacking: bool,
    pub module_threshold: usize,
    pub min_repeat: usize,
}

impl Default for SessionOptions {
    fn default() -> Self {
        SessionOptions {
            cgm: false,
            stacking: true,
            module_threshold: DEFAULT_THRESHOLD,
            min_repeat: DEFAULT_MIN_REPEAT,
        }
    }
}

impl SessionOptions {
    pub fn validate(&self) -> Result<(), SessionError> {
        if self.module_threshold < 1 {
            return Err(SessionError::InvalidOptions("module_threshold must be at least 1".into()));
        }
        if self.min_repeat < 2 {
            return Err(SessionError::InvalidOptions("min_repeat must be at least 2".into()));
        }
        Ok(())
    }
}

/// Element counts before and after simplification.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Stats {
    pub raw_nodes: usize,
    pub raw_edges: usize,
    pub node_count: usize,
    pub edge_count: usize,
    pub hidden_edges: usize,
    pub reduction_pct: f64,
}

impl Stats {
    fn new(raw_nodes: usize, raw_edges: usize, node_count: usize, edge_count: usize, hidden_edges: usize) -> Self {
        let raw = raw_nodes + raw_edges;
        let vis = node_count + edge_count;
        let reduction_pct = if raw == 0 {
            0.0
        } else {
            100.0 * (1.0 - vis as f64 / raw as f64)
        };
        Stats {
            raw_nodes,
            raw_edges,
            node_count,
            edge_count,
            hidden_edges,
            reduction_pct,
        }
    }
}

/// Expanded containers that show nothing inside are still drawn as boxes,
/// so they count as nodes.
fn empty_containers(pg: &ProcessedGraph, frontier: &Frontier, nodes: &[NodeIx]) -> usize {
    let mut occupied = vec![false; pg.tree.len()];
    for &n in nodes {
        for a in pg.tree.ancestors(n) {
            if occupied[a] {
                break;
            }
            occupied[a] = true;
        }
    }
    frontier
        .containers()
        .into_iter()
        .filter(|&c| c != 0 && !occupied[c])
        .count()
}

/// Output of the pruning and stacking stages for one frontier.
#[derive(Clone, Debug)]
pub struct Derived {
    pub frontier: Frontier,
    pub modules: ModuleInfo,
    pub groups: Vec<IsoGroup>,
    pub stacked: Stacked,
    pub stats: Stats,
}

pub fn derive(pg: &ProcessedGraph, frontier: Frontier, options: &SessionOptions) -> Result<Derived, PruneError> {
    let modules = recognize_modules(pg, options.module_threshold);
    let pruned = prune_edges(pg, &frontier, &modules)?;
    let groups = if options.stacking {
        detect_iso_groups(pg, &frontier)
    } else {
        Vec::new()
    };
    let stacked = stack(pg, frontier.nodes(), &pruned, &groups, options.min_repeat);
    let raw_nodes = frontier.nodes().len() + empty_containers(pg, &frontier, frontier.nodes());
    let raw_edges = quotient_edges(pg, &frontier).len();
    let hidden = stacked.edges.iter().filter(|e| e.is_hidden()).count();
    let stats = Stats::new(
        raw_nodes,
        raw_edges,
        stacked.nodes.len() + empty_containers(pg, &frontier, &stacked.nodes),
        stacked.edges.len() - hidden,
        hidden,
    );
    Ok(Derived {
        frontier,
        modules,
        groups,
        stacked,
        stats,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DepthStats {
    pub depth: usize,
    pub raw_nodes: usize,
    pub raw_edges: usize,
    pub vis_nodes: usize,
    pub vis_edges: usize,
    pub reduction_pct: f64,
}

pub const STATS_CSV_HEADER: &str = "depth,raw_nodes,raw_edges,vis_nodes,vis_edges,reduction_pct";

pub fn stats_csv(rows: &[DepthStats]) -> String {
    let mut out = String::from(STATS_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{:.2}\n",
            r.depth, r.raw_nodes, r.raw_edges, r.vis_nodes, r.vis_edges, r.reduction_pct
        ));
    }
    out
}

/// Depth table for a processed graph: at depth `d` every metanode shallower
/// than `d` is expanded.
pub fn stats_by_depth(
    pg: &ProcessedGraph,
    options: &SessionOptions,
    max_depth: usize,
) -> Result<Vec<DepthStats>, SessionError> {
    if max_depth < 1 {
        return Err(SessionError::InvalidOptions("max_depth must be at least 1".into()));
    }
    options.validate()?;
    let concept;
    let pg = if options.cgm {
        concept = build_concept_graph(pg);
        &concept.graph
    } else {
        pg
    };
    (1..=max_depth)
        .map(|depth| {
            let d = derive(pg, Frontier::to_depth(pg, depth), options)?;
            Ok(DepthStats {
                depth,
                raw_nodes: d.stats.raw_nodes,
                raw_edges: d.stats.raw_edges,
                vis_nodes: d.stats.node_count,
                vis_edges: d.stats.edge_count,
                reduction_pct: d.stats.reduction_pct,
            })
        })
        .collect()
}

/// One visible graph: a derived frontier over a specific working graph.
#[derive(Clone, Debug)]
pub struct VisibleGraph {
    pub graph: Arc<ProcessedGraph>,
    pub derived: Derived,
    pub layer_class: Option<BTreeMap<NodeIx, LayerClass>>,
    pub cycle_report: Option<CycleReport>,
    pub options: SessionOptions,
    pub revision: u64,
}

impl VisibleGraph {
    pub fn stacked(&self) -> &Stacked {
        &self.derived.stacked
    }

    pub fn frontier(&self) -> &Frontier {
        &self.derived.frontier
    }

    pub fn stats(&self) -> Stats {
        self.derived.stats
    }

    /// The visible node standing for a tree node, if any.
    pub fn visible_rep(&self, ix: NodeIx) -> Option<NodeIx> {
        let r = self.frontier().rep(ix)?;
        Some(self.stacked().folded.get(&r).copied().unwrap_or(r))
    }

    pub fn port_key(&self, id: &str) -> Result<PortKey, PruneError> {
        let key = parse_port_id(&self.graph, id)?;
        if self.stacked().ports.contains_key(&key) {
            Ok(key)
        } else {
            Err(PruneError::UnknownPort(id.to_owned()))
        }
    }

    /// Hidden edges bound to a port (shown when the port is hovered).
    pub fn reveal_hidden(&self, port: &str) -> Result<Vec<usize>, PruneError> {
        let key = self.port_key(port)?;
        Ok(self.stacked().ports[&key].hidden.clone())
    }

    pub fn pile(&self, id: &str) -> Option<&crate::iso::Pile> {
        self.stacked().piles.iter().find(|p| p.id == id)
    }

    pub fn payload(&self) -> VisiblePayload {
        let pg = &*self.graph;
        let tree = &pg.tree;
        let st = self.stacked();
        let path = |ix: NodeIx| tree.id(ix).to_string();
        let nodes = st
            .nodes
            .iter()
            .map(|&n| {
                let node = tree.node(n);
                let attachments = pg.attachment(n).map(|a| AttachmentPayload {
                    constants: a.constants.iter().map(|&c| path(c)).collect(),
                    parameters: a.parameters.iter().map(|&c| path(c)).collect(),
                });
                let pile = st.pile_of.get(&n).map(|&p| {
                    let pile = &st.piles[p];
                    let pos = pile.representative().iter().position(|&r| r == n).unwrap_or(0);
                    PileRef {
                        id: pile.id.clone(),
                        repeat: pile.repeat(),
                        members: pile.members.iter().map(|m| path(m[pos])).collect(),
                    }
                });
                NodePayload {
                    path: path(n),
                    kind: node.kind.label(),
                    op_type: node.kind.op_type().map(str::to_owned),
                    parent: tree.parent(n).map(path).unwrap_or_default(),
                    module: self.derived.modules.is_module(n),
                    descendants: node.descendant_count,
                    layer_class: self.layer_class.as_ref().and_then(|m| m.get(&n)).copied(),
                    attachments,
                    pile,
                }
            })
            .collect();
        let containers = self
            .frontier()
            .containers()
            .into_iter()
            .map(|c| ContainerPayload {
                path: path(c),
                parent: tree.parent(c).map(path),
                module: self.derived.modules.is_module(c),
                layer_class: self.layer_class.as_ref().and_then(|m| m.get(&c)).copied(),
            })
            .collect();
        let edges = (0..st.edges.len()).map(|i| self.edge_payload(i)).collect();
        let ports = st
            .ports
            .values()
            .map(|p| PortPayload {
                id: port_id(pg, &p.key),
                owner: path(p.key.owner),
                side: p.key.side.as_str(),
                level: p.key.level,
                kind: p.kind,
                hidden_edges: p.hidden.clone(),
            })
            .collect();
        let piles = st.piles.iter().map(|p| self.pile_payload(p)).collect();
        VisiblePayload {
            graph: pg.name.clone(),
            revision: self.revision,
            options: self.options,
            expanded: self
                .frontier()
                .containers()
                .into_iter()
                .filter(|&c| c != 0)
                .map(path)
                .collect(),
            nodes,
            containers,
            edges,
            ports,
            piles,
            stats: self.stats(),
            cycle_report: self.cycle_report.clone(),
        }
    }

    /// Payload entry for stacked edge `i`.
    pub fn edge_payload(&self, i: usize) -> EdgePayload {
        let pg = &*self.graph;
        let e = &self.stacked().edges[i];
        let end = |e: &Endpoint| EndpointPayload {
            node: pg.tree.id(e.node()).to_string(),
            port: e.port().map(|k| port_id(pg, &k)),
        };
        EdgePayload {
            id: i,
            kind: e.kind,
            src: end(&e.src),
            dst: end(&e.dst),
            contributors_count: e.contributors.len(),
            hidden: e.is_hidden(),
        }
    }

    pub fn pile_payload(&self, p: &crate::iso::Pile) -> PilePayload {
        let tree = &self.graph.tree;
        PilePayload {
            id: p.id.clone(),
            category: p.category,
            repeat: p.repeat(),
            members: p
                .members
                .iter()
                .map(|m| m.iter().map(|&n| tree.id(n).to_string()).collect())
                .collect(),
        }
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(&self.payload()).expect("payload serializes");
        out.push(b'\n');
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VisiblePayload {
    pub graph: String,
    pub revision: u64,
    pub options: SessionOptions,
    pub expanded: Vec<String>,
    pub nodes: Vec<NodePayload>,
    pub containers: Vec<ContainerPayload>,
    pub edges: Vec<EdgePayload>,
    pub ports: Vec<PortPayload>,
    pub piles: Vec<PilePayload>,
    pub stats: Stats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cycle_report: Option<CycleReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct NodePayload {
    pub path: String,
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub op_type: Option<String>,
    pub parent: String,
    pub module: bool,
    pub descendants: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layer_class: Option<LayerClass>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attachments: Option<AttachmentPayload>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pile: Option<PileRef>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AttachmentPayload {
    pub constants: Vec<String>,
    pub parameters: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PileRef {
    pub id: String,
    pub repeat: usize,
    /// The node standing at this position in every member.
    pub members: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ContainerPayload {
    pub path: String,
    pub parent: Option<String>,
    pub module: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layer_class: Option<LayerClass>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EndpointPayload {
    pub node: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub port: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EdgePayload {
    pub id: usize,
    pub kind: EdgeKind,
    pub src: EndpointPayload,
    pub dst: EndpointPayload,
    pub contributors_count: usize,
    pub hidden: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PortPayload {
    pub id: String,
    pub owner: String,
    pub side: &'static str,
    pub level: usize,
    pub kind: PortKind,
    pub hidden_edges: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PilePayload {
    pub id: String,
    pub category: crate::iso::Category,
    pub repeat: usize,
    pub members: Vec<Vec<String>>,
}

/// One step of a visible path: the visible edges drawn between two
/// consecutive visible nodes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PathStep {
    pub from: String,
    pub to: String,
    pub edges: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VisiblePath {
    pub nodes: Vec<String>,
    pub steps: Vec<PathStep>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PathResult {
    pub from: String,
    pub to: String,
    pub reachable: bool,
    /// A shortest operation-level path, empty when unreachable.
    pub leaf_path: Vec<String>,
    pub paths: Vec<VisiblePath>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PortSummary {
    pub id: String,
    pub side: &'static str,
    pub level: usize,
    pub hidden_edges: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Profile {
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub op_type: Option<String>,
    pub attrs: Attrs,
    pub parent: String,
    pub in_degree: usize,
    pub out_degree: usize,
    pub descendants: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub visible_as: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layer_class: Option<LayerClass>,
    pub ports: Vec<PortSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchHit {
    pub path: String,
    pub profile: Profile,
}

#[derive(Clone, Debug)]
struct Snapshot {
    graph: Arc<ProcessedGraph>,
    expanded: BTreeSet<NodeIx>,
}

/// One loaded graph with its expansion state and options.
#[derive(Clone, Debug)]
pub struct Session {
    base: Arc<ProcessedGraph>,
    options: SessionOptions,
    /// Base graph after the concept-graph transform, when enabled.
    prepared: Arc<ProcessedGraph>,
    layer_class: Option<BTreeMap<NodeIx, LayerClass>>,
    cycle_report: Option<CycleReport>,
    /// Prepared graph after this session's ungroup edits.
    working: Arc<ProcessedGraph>,
    expanded: BTreeSet<NodeIx>,
    history: Vec<Snapshot>,
    revision: u64,
    cache: Option<Arc<VisibleGraph>>,
}

impl Session {
    pub fn new(base: Arc<ProcessedGraph>, options: SessionOptions) -> Result<Self, SessionError> {
        options.validate()?;
        let mut s = Session {
            prepared: base.clone(),
            working: base.clone(),
            base,
            options,
            layer_class: None,
            cycle_report: None,
            expanded: BTreeSet::new(),
            history: Vec::new(),
            revision: 0,
            cache: None,
        };
        s.prepare();
        Ok(s)
    }

    fn prepare(&mut self) {
        if self.options.cgm {
            let cg = build_concept_graph(&self.base);
            self.prepared = Arc::new(cg.graph);
            self.layer_class = Some(cg.layer_class);
            self.cycle_report = Some(cg.report);
        } else {
            self.prepared = self.base.clone();
            self.layer_class = None;
            self.cycle_report = None;
        }
        self.working = self.prepared.clone();
        self.expanded.clear();
        self.history.clear();
        self.cache = None;
    }

    pub fn options(&self) -> SessionOptions {
        self.options
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn graph(&self) -> &Arc<ProcessedGraph> {
        &self.working
    }

    /// Replaces the options; expansion state and ungroups are reset.
    pub fn set_options(&mut self, options: SessionOptions) -> Result<(), SessionError> {
        options.validate()?;
        self.options = options;
        self.prepare();
        self.bump();
        Ok(())
    }

    fn bump(&mut self) {
        self.revision += 1;
        self.cache = None;
    }

    fn checkpoint(&mut self) {
        self.history.push(Snapshot {
            graph: self.working.clone(),
            expanded: self.expanded.clone(),
        });
    }

    fn lookup(&self, path: &str) -> Result<NodeIx, SessionError> {
        self.working
            .tree
            .get(path)
            .ok_or_else(|| SessionError::UnknownNode(path.to_owned()))
    }

    fn meta(&self, path: &str) -> Result<NodeIx, SessionError> {
        let ix = self.lookup(path)?;
        if !self.working.tree.is_meta(ix) {
            return Err(SessionError::NotAMetaNode(path.to_owned()));
        }
        Ok(ix)
    }

    pub fn is_expanded(&self, path: &str) -> bool {
        match self.working.tree.get(path) {
            Some(0) => true,
            Some(ix) => self.expanded.contains(&ix),
            None => false,
        }
    }

    /// Expanded metanode paths (root excluded), preorder.
    pub fn expanded_paths(&self) -> Vec<String> {
        self.expanded
            .iter()
            .map(|&ix| self.working.tree.id(ix).to_string())
            .collect()
    }

    pub fn expand(&mut self, path: &str) -> Result<u64, SessionError> {
        let ix = self.meta(path)?;
        let tree = &self.working.tree;
        if tree.ancestors(ix).any(|a| a != 0 && !self.expanded.contains(&a)) {
            return Err(SessionError::NotExpandable(path.to_owned()));
        }
        self.checkpoint();
        if ix != 0 {
            self.expanded.insert(ix);
        }
        self.bump();
        Ok(self.revision)
    }

    /// Collapses `path` and every expanded node below it. Collapsing the
    /// root collapses everything.
    pub fn collapse(&mut self, path: &str) -> Result<u64, SessionError> {
        let ix = self.meta(path)?;
        self.checkpoint();
        let range = self.working.tree.subtree(ix);
        self.expanded.retain(|e| !range.contains(e));
        self.bump();
        Ok(self.revision)
    }

    /// Expands every metanode shallower than `depth`.
    pub fn expand_to_depth(&mut self, depth: usize) -> u64 {
        self.checkpoint();
        let tree = &self.working.tree;
        self.expanded = tree.metanodes().filter(|&m| tree.depth(m) < depth).collect();
        self.bump();
        self.revision
    }

    /// Splices the children of a metanode into its parent. Children whose
    /// segment clashes with a sibling of the metanode get a numeric suffix.
    pub fn ungroup(&mut self, path: &str) -> Result<u64, SessionError> {
        let ix = self.meta(path)?;
        if ix == 0 {
            return Err(SessionError::UngroupRoot);
        }
        let pg = self.working.clone();
        let tree = &pg.tree;
        let parent = tree.parent(ix).expect("non-root has a parent");
        let mut taken: BTreeSet<String> = tree
            .children(parent)
            .iter()
            .filter(|&&c| c != ix)
            .map(|&c| tree.node(c).segment.clone())
            .collect();
        let mut rename: HashMap<NodeIx, String> = HashMap::new();
        for &c in tree.children(ix) {
            let seg = &tree.node(c).segment;
            let mut name = seg.clone();
            let mut k = 2;
            while !taken.insert(name.clone()) {
                name = format!("{seg}_{k}");
                k += 1;
            }
            rename.insert(c, name);
        }
        let depth = tree.depth(ix);
        // New segment path of every node under `ix`, used to carry the
        // expansion state across the rebuild.
        let new_segments = |n: NodeIx| -> Vec<String> {
            let mut segs = tree.segment_path(n);
            if tree.contains(ix, n) && n != ix {
                let child = tree.child_toward(ix, n).unwrap();
                segs[depth] = rename[&child].clone();
                segs.remove(depth - 1);
            }
            segs
        };
        let entries: Vec<LeafEntry> = tree
            .leaves()
            .map(|leaf| {
                let node = tree.node(leaf);
                LeafEntry {
                    id: node.id.clone(),
                    kind: node.kind.clone(),
                    attrs: node.attrs.clone(),
                    segments: new_segments(leaf),
                }
            })
            .collect();
        let next = pg.with_entries(entries);
        let expanded: BTreeSet<NodeIx> = self
            .expanded
            .iter()
            .filter(|&&e| e != ix)
            .filter_map(|&e| find_by_segments(&next, &new_segments(e)))
            .collect();
        self.checkpoint();
        self.working = Arc::new(next);
        self.expanded = expanded;
        self.bump();
        Ok(self.revision)
    }

    /// Reverts the last expand, collapse or ungroup.
    pub fn undo(&mut self) -> Result<u64, SessionError> {
        let snap = self.history.pop().ok_or(SessionError::NothingToUndo)?;
        self.working = snap.graph;
        self.expanded = snap.expanded;
        self.bump();
        Ok(self.revision)
    }

    pub fn frontier(&self) -> Frontier {
        Frontier::from_expanded(&self.working, self.expanded.iter().copied())
    }

    /// The visible graph for the current state; cached until the next
    /// mutation.
    pub fn derive_visible(&mut self) -> Result<Arc<VisibleGraph>, SessionError> {
        if let Some(v) = &self.cache {
            return Ok(v.clone());
        }
        let derived = derive(&self.working, self.frontier(), &self.options)?;
        let layer_class = self.layer_class.as_ref().map(|lc| {
            // Ungroup edits renumber metanodes; reclassify on the working tree.
            if Arc::ptr_eq(&self.working, &self.prepared) {
                lc.clone()
            } else {
                crate::concept::classify_layers(&self.working)
            }
        });
        let v = Arc::new(VisibleGraph {
            graph: self.working.clone(),
            derived,
            layer_class,
            cycle_report: self.cycle_report.clone(),
            options: self.options,
            revision: self.revision,
        });
        self.cache = Some(v.clone());
        Ok(v)
    }

    pub fn find_path(&mut self, from: &str, to: &str) -> Result<PathResult, SessionError> {
        let start = self.lookup(from)?;
        let end = self.lookup(to)?;
        let vis = self.derive_visible()?;
        Ok(find_path(&vis, start, end))
    }

    pub fn search(&mut self, query: &str) -> Result<Vec<SearchHit>, SessionError> {
        if query.chars().count() < MIN_QUERY_LEN {
            return Ok(Vec::new());
        }
        let vis = self.derive_visible()?;
        let needle = query.to_lowercase();
        let tree = &vis.graph.tree;
        Ok((1..tree.len())
            .filter(|&ix| tree.id(ix).as_str().to_lowercase().contains(&needle))
            .map(|ix| SearchHit {
                path: tree.id(ix).to_string(),
                profile: profile(&vis, ix),
            })
            .collect())
    }

    pub fn stats_by_depth(&self, max_depth: usize) -> Result<Vec<DepthStats>, SessionError> {
        stats_by_depth(&self.base, &self.options, max_depth)
    }
}

fn find_by_segments(pg: &ProcessedGraph, segs: &[String]) -> Option<NodeIx> {
    let tree = &pg.tree;
    let mut cur = 0;
    for s in segs {
        cur = *tree.children(cur).iter().find(|&&c| &tree.node(c).segment == s)?;
    }
    Some(cur)
}

/// Operation leaves a tree node stands for. Data nodes stand for the
/// operations they feed.
fn op_leaves(pg: &ProcessedGraph, ix: NodeIx) -> Vec<NodeIx> {
    let tree = &pg.tree;
    if tree.is_meta(ix) {
        return tree
            .subtree(ix)
            .filter(|&n| tree.node(n).kind.is_operation())
            .collect();
    }
    match tree.node(ix).kind {
        NodeKind::Operation { .. } => vec![ix],
        _ => pg
            .attachments
            .iter()
            .filter(|(_, a)| a.constants.contains(&ix) || a.parameters.contains(&ix))
            .map(|(&op, _)| op)
            .collect(),
    }
}

fn profile(vis: &VisibleGraph, ix: NodeIx) -> Profile {
    let pg = &*vis.graph;
    let tree = &pg.tree;
    let node = tree.node(ix);
    let range = tree.subtree(ix);
    let (mut in_degree, mut out_degree) = (0, 0);
    for e in &pg.leaf_edges {
        let (s, d) = (range.contains(&e.src), range.contains(&e.dst));
        if s && !d {
            out_degree += 1;
        }
        if d && !s {
            in_degree += 1;
        }
    }
    let ports = vis
        .stacked()
        .ports
        .values()
        .filter(|p| p.key.owner == ix)
        .map(|p| PortSummary {
            id: port_id(pg, &p.key),
            side: p.key.side.as_str(),
            level: p.key.level,
            hidden_edges: p.hidden.len(),
        })
        .collect();
    Profile {
        kind: node.kind.label(),
        op_type: node.kind.op_type().map(str::to_owned),
        attrs: node.attrs.clone(),
        parent: tree.parent(ix).map(|p| tree.id(p).to_string()).unwrap_or_default(),
        in_degree,
        out_degree,
        descendants: node.descendant_count,
        visible_as: vis.visible_rep(ix).map(|r| tree.id(r).to_string()),
        layer_class: vis.layer_class.as_ref().and_then(|m| m.get(&ix)).copied(),
        ports,
    }
}

/// Paths from `start` to `end`. Reachability is decided on operation-level
/// edges; the result lifts paths onto the visible graph.
pub fn find_path(vis: &VisibleGraph, start: NodeIx, end: NodeIx) -> PathResult {
    let pg = &*vis.graph;
    let tree = &pg.tree;
    let name = |ix: NodeIx| tree.id(ix).to_string();
    let mut result = PathResult {
        from: name(start),
        to: name(end),
        reachable: false,
        leaf_path: Vec::new(),
        paths: Vec::new(),
    };
    let sources = op_leaves(pg, start);
    let targets: HashSet<NodeIx> = op_leaves(pg, end).into_iter().collect();
    let trivial = |ix: NodeIx| VisiblePath {
        nodes: vec![vis.visible_rep(ix).map_or_else(|| name(ix), name)],
        steps: Vec::new(),
    };
    if start == end {
        result.reachable = true;
        result.leaf_path = sources.first().map(|&s| vec![name(s)]).unwrap_or_default();
        result.paths.push(trivial(start));
        return result;
    }
    if let Some(&s) = sources.iter().find(|s| targets.contains(s)) {
        result.reachable = true;
        result.leaf_path = vec![name(s)];
        result.paths.push(trivial(s));
        return result;
    }
    // Forward BFS from every source, remembering the edge used.
    let n = tree.len();
    let mut parent_edge = vec![usize::MAX; n];
    let mut seen = vec![false; n];
    let mut queue: VecDeque<NodeIx> = VecDeque::new();
    for &s in &sources {
        seen[s] = true;
        queue.push_back(s);
    }
    let mut hit = None;
    while let Some(u) = queue.pop_front() {
        if targets.contains(&u) {
            hit = Some(u);
            break;
        }
        for &e in pg.out_edges(u) {
            let v = pg.leaf_edges[e].dst;
            if !seen[v] {
                seen[v] = true;
                parent_edge[v] = e;
                queue.push_back(v);
            }
        }
    }
    let Some(hit) = hit else {
        return result;
    };
    result.reachable = true;
    let mut witness = Vec::new();
    let mut cur = hit;
    while parent_edge[cur] != usize::MAX {
        witness.push(parent_edge[cur]);
        cur = pg.leaf_edges[parent_edge[cur]].src;
    }
    witness.reverse();
    result.leaf_path = std::iter::once(cur)
        .chain(witness.iter().map(|&e| pg.leaf_edges[e].dst))
        .map(name)
        .collect();

    // Leaves on some source→target path.
    let mut fwd = vec![false; n];
    let mut stack: Vec<NodeIx> = sources.clone();
    for &s in &sources {
        fwd[s] = true;
    }
    while let Some(u) = stack.pop() {
        for &e in pg.out_edges(u) {
            let v = pg.leaf_edges[e].dst;
            if !fwd[v] {
                fwd[v] = true;
                stack.push(v);
            }
        }
    }
    let mut bwd = vec![false; n];
    let mut stack: Vec<NodeIx> = targets.iter().copied().collect();
    for &t in &targets {
        bwd[t] = true;
    }
    while let Some(v) = stack.pop() {
        for &e in pg.in_edges(v) {
            let u = pg.leaf_edges[e].src;
            if !bwd[u] {
                bwd[u] = true;
                stack.push(u);
            }
        }
    }
    let st = vis.stacked();
    let rep = |x: NodeIx| vis.visible_rep(x).expect("operations have a visible representative");
    // Lifted edges between visible nodes with the chain of one contributor.
    let mut lifted: BTreeMap<NodeIx, BTreeMap<NodeIx, Vec<usize>>> = BTreeMap::new();
    let chain_edges = |e: usize| match st.chains[e] {
        Chain::Internal => Vec::new(),
        c => c.edges(),
    };
    for (i, e) in pg.leaf_edges.iter().enumerate() {
        if fwd[e.src] && bwd[e.src] && fwd[e.dst] && bwd[e.dst] {
            let (a, b) = (rep(e.src), rep(e.dst));
            if a != b {
                lifted.entry(a).or_default().entry(b).or_insert_with(|| chain_edges(i));
            }
        }
    }
    let starts: BTreeSet<NodeIx> = sources.iter().filter(|&&s| bwd[s]).map(|&s| rep(s)).collect();
    let ends: BTreeSet<NodeIx> = targets.iter().filter(|&&t| fwd[t]).map(|&t| rep(t)).collect();
    let to_path = |nodes: &[NodeIx]| VisiblePath {
        nodes: nodes.iter().map(|&x| name(x)).collect(),
        steps: nodes
            .windows(2)
            .map(|w| PathStep {
                from: name(w[0]),
                to: name(w[1]),
                edges: lifted[&w[0]][&w[1]].clone(),
            })
            .collect(),
    };
    let mut queue: VecDeque<Vec<NodeIx>> = starts.iter().map(|&s| vec![s]).collect();
    let mut expansions = 0;
    while let Some(p) = queue.pop_front() {
        let last = *p.last().unwrap();
        if ends.contains(&last) {
            result.paths.push(to_path(&p));
            if result.paths.len() == MAX_PATHS {
                break;
            }
            continue;
        }
        expansions += 1;
        if expansions > PATH_EXPANSION_CAP {
            break;
        }
        if let Some(next) = lifted.get(&last) {
            for &b in next.keys() {
                if !p.contains(&b) {
                    let mut q = p.clone();
                    q.push(b);
                    queue.push_back(q);
                }
            }
        }
    }
    if result.paths.is_empty() {
        // Enumeration capped out: fall back to the lifted witness.
        let mut nodes: Vec<NodeIx> = Vec::new();
        for x in std::iter::once(cur).chain(witness.iter().map(|&e| pg.leaf_edges[e].dst)) {
            let r = rep(x);
            if nodes.last() != Some(&r) {
                nodes.push(r);
            }
        }
        result.paths.push(to_path(&nodes));
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_hierarchy, RawGraph};

    fn session(raw: &RawGraph) -> Session {
        Session::new(Arc::new(build_hierarchy(raw).unwrap()), SessionOptions::default()).unwrap()
    }

    fn chain() -> RawGraph {
        let mut raw = RawGraph::new("t");
        raw.op("A/x", "Conv2D")
            .op("A/y", "ReLU")
            .op("B/z", "MatMul")
            .op("B/w", "Add")
            .link("A/x", "A/y")
            .link("A/y", "B/z")
            .link("B/z", "B/w");
        raw
    }

    #[test]
    fn collapsed_graph_shows_top_level() {
        let mut s = session(&chain());
        let v = s.derive_visible().unwrap();
        let p = v.payload();
        let paths: Vec<&str> = p.nodes.iter().map(|n| n.path.as_str()).collect();
        assert_eq!(paths, ["A", "B"]);
        assert_eq!(p.edges.len(), 1);
        assert_eq!(p.stats.node_count, 2);
    }

    #[test]
    fn expand_collapse_round_trip() {
        let mut s = session(&chain());
        let before = s.derive_visible().unwrap().payload().nodes.len();
        s.expand("A").unwrap();
        assert_eq!(s.derive_visible().unwrap().payload().nodes.len(), 3);
        s.collapse("A").unwrap();
        assert_eq!(s.derive_visible().unwrap().payload().nodes.len(), before);
        assert_eq!(s.revision(), 2);
        assert!(matches!(s.expand("A/x"), Err(SessionError::NotAMetaNode(_))));
        assert!(matches!(s.expand("nope"), Err(SessionError::UnknownNode(_))));
    }

    #[test]
    fn collapse_drops_descendants() {
        let mut raw = RawGraph::new("t");
        raw.op("A/B/x", "X").op("A/y", "X");
        let mut s = session(&raw);
        assert!(matches!(s.expand("A/B"), Err(SessionError::NotExpandable(_))));
        s.expand("A").unwrap();
        s.expand("A/B").unwrap();
        s.collapse("A").unwrap();
        assert!(s.expanded_paths().is_empty());
    }

    #[test]
    fn ungroup_and_undo() {
        let mut raw = RawGraph::new("t");
        raw.op("Main/net/dense/m", "MatMul").op("Main/net/soft", "Softmax").op("Main/loss", "Add");
        let mut s = session(&raw);
        s.expand("Main").unwrap();
        s.expand("Main/net").unwrap();
        s.ungroup("Main/net").unwrap();
        let tree = &s.graph().tree;
        let main = tree.get("Main").unwrap();
        let kids: Vec<&str> = tree.children(main).iter().map(|&c| tree.id(c).as_str()).collect();
        // leaves keep their names; only metanode paths follow the tree
        assert_eq!(kids, ["Main/dense", "Main/loss", "Main/net/soft"]);
        assert!(s.is_expanded("Main"));
        s.undo().unwrap();
        assert!(s.is_expanded("Main/net"));
        assert!(matches!(s.ungroup("/"), Err(SessionError::UngroupRoot)));
    }

    #[test]
    fn paths_follow_edge_direction() {
        let mut s = session(&chain());
        let fwd = s.find_path("A/x", "B/w").unwrap();
        assert!(fwd.reachable);
        assert_eq!(fwd.leaf_path, ["A/x", "A/y", "B/z", "B/w"]);
        assert_eq!(fwd.paths[0].nodes, ["A", "B"]);
        assert_eq!(fwd.paths[0].steps[0].edges, [0]);
        let back = s.find_path("B/w", "A/x").unwrap();
        assert!(!back.reachable);
        assert!(back.paths.is_empty());
        let same = s.find_path("A", "A").unwrap();
        assert_eq!(same.paths.len(), 1);
        assert!(same.paths[0].steps.is_empty());
    }

    #[test]
    fn search_rules() {
        let mut s = session(&chain());
        assert!(s.search("").unwrap().is_empty());
        assert!(s.search("a").unwrap().is_empty());
        let hits = s.search("A/").unwrap();
        let paths: Vec<&str> = hits.iter().map(|h| h.path.as_str()).collect();
        assert_eq!(paths, ["A/x", "A/y"]);
        assert_eq!(hits[0].profile.op_type.as_deref(), Some("Conv2D"));
        assert_eq!(hits[1].profile.out_degree, 1);
        assert_eq!(hits[1].profile.visible_as.as_deref(), Some("A"));
    }

    #[test]
    fn stats_rows() {
        let pg = build_hierarchy(&chain()).unwrap();
        let rows = stats_by_depth(&pg, &SessionOptions::default(), 2).unwrap();
        assert_eq!(rows[0].raw_nodes, 2);
        assert_eq!(rows[0].raw_edges, 1);
        assert_eq!(rows[1].raw_nodes, 4);
        assert_eq!(rows[1].raw_edges, 3);
        let csv = stats_csv(&rows);
        assert!(csv.starts_with("depth,raw_nodes,raw_edges,vis_nodes,vis_edges,reduction_pct\n1,2,1,2,1,0.00\n"));
    }

    #[test]
    fn cache_is_reused_until_mutation() {
        let mut s = session(&chain());
        let a = s.derive_visible().unwrap();
        let b = s.derive_visible().unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        s.expand("A").unwrap();
        let c = s.derive_visible().unwrap();
        assert!(!Arc::ptr_eq(&a, &c));
    }

    #[test]
    fn options_are_validated() {
        let pg = Arc::new(build_hierarchy(&chain()).unwrap());
        let bad = SessionOptions {
            min_repeat: 1,
            ..SessionOptions::default()
        };
        assert!(Session::new(pg, bad).is_err());
    }
}
