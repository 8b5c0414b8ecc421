//! Core graph model.
//!
//! A [`RawGraph`] is a flat list of leaf nodes (operations, constants and
//! parameters) whose slash-delimited names encode a namespace hierarchy.
//! [`build_hierarchy`] turns it into a [`ProcessedGraph`]: a [`HierarchyTree`]
//! with one metanode per distinct name prefix, the operation-to-operation leaf
//! edges, and the data nodes folded into attachments of the operations they
//! feed.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

pub const SEPARATOR: char = '/';

/// Index of a node inside a [`HierarchyTree`].
pub type NodeIx = usize;

pub type Attrs = BTreeMap<String, String>;

/// Slash-delimited scoped name, e.g. `Main/network_train/softmax/Softmax-op42`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct NodeId(String);

impl NodeId {
    pub fn new(path: impl Into<String>) -> Result<Self, ModelError> {
        let path = path.into();
        if path.is_empty() || path.split(SEPARATOR).any(str::is_empty) {
            return Err(ModelError::InvalidPath(path));
        }
        Ok(NodeId(path))
    }

    /// The synthetic root of every hierarchy.
    pub fn root() -> Self {
        NodeId("/".to_owned())
    }

    pub fn is_root(&self) -> bool {
        self.0 == "/"
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn segments(&self) -> impl Iterator<Item = &str> {
        self.0.split(SEPARATOR).filter(|s| !s.is_empty())
    }

    pub fn basename(&self) -> &str {
        self.0.rsplit(SEPARATOR).next().unwrap_or(&self.0)
    }

    pub(crate) fn from_segments<S: AsRef<str>>(segments: &[S]) -> Self {
        if segments.is_empty() {
            return Self::root();
        }
        let joined: Vec<&str> = segments.iter().map(AsRef::as_ref).collect();
        NodeId(joined.join("/"))
    }
}

impl TryFrom<String> for NodeId {
    type Error = ModelError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        if value == "/" {
            return Ok(Self::root());
        }
        NodeId::new(value)
    }
}

impl From<NodeId> for String {
    fn from(id: NodeId) -> String {
        id.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for NodeId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Numeric-aware ordering of path segments: `2_Features` sorts before
/// `10_Features`. Falls back to byte order so the result is total.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    let (mut ai, mut bi) = (a.as_bytes(), b.as_bytes());
    loop {
        match (ai.first(), bi.first()) {
            (None, None) => return a.cmp(b),
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some(x), Some(y)) if x.is_ascii_digit() && y.is_ascii_digit() => {
                let an = ai.iter().take_while(|c| c.is_ascii_digit()).count();
                let bn = bi.iter().take_while(|c| c.is_ascii_digit()).count();
                let (ad, bd) = (trim_zeros(&ai[..an]), trim_zeros(&bi[..bn]));
                let ord = ad.len().cmp(&bd.len()).then_with(|| ad.cmp(bd));
                if ord != Ordering::Equal {
                    return ord;
                }
                ai = &ai[an..];
                bi = &bi[bn..];
            }
            (Some(x), Some(y)) => {
                if x != y {
                    return x.cmp(y);
                }
                ai = &ai[1..];
                bi = &bi[1..];
            }
        }
    }
}

fn trim_zeros(digits: &[u8]) -> &[u8] {
    let start = digits.iter().take_while(|&&c| c == b'0').count();
    &digits[start.min(digits.len().saturating_sub(1))..]
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NodeKind {
    Operation { op_type: String },
    Constant,
    Parameter,
    Meta,
}

impl NodeKind {
    pub fn op(op_type: impl Into<String>) -> Self {
        NodeKind::Operation {
            op_type: op_type.into(),
        }
    }

    pub fn is_data(&self) -> bool {
        matches!(self, NodeKind::Constant | NodeKind::Parameter)
    }

    pub fn is_operation(&self) -> bool {
        matches!(self, NodeKind::Operation { .. })
    }

    pub fn is_meta(&self) -> bool {
        matches!(self, NodeKind::Meta)
    }

    pub fn op_type(&self) -> Option<&str> {
        match self {
            NodeKind::Operation { op_type } => Some(op_type),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            NodeKind::Operation { .. } => "operation",
            NodeKind::Constant => "constant",
            NodeKind::Parameter => "parameter",
            NodeKind::Meta => "meta",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawNode {
    pub id: NodeId,
    pub kind: NodeKind,
    pub attrs: Attrs,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RawEdge {
    pub src: NodeId,
    pub dst: NodeId,
}

/// Leaf-level graph as read from a graph definition file.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawGraph {
    pub name: String,
    pub nodes: Vec<RawNode>,
    pub edges: Vec<RawEdge>,
}

impl RawGraph {
    pub fn new(name: impl Into<String>) -> Self {
        RawGraph {
            name: name.into(),
            ..Default::default()
        }
    }

    /// Appends a node. Panics on a malformed path; intended for fixtures and
    /// generators where names are known to be valid.
    pub fn add(&mut self, path: &str, kind: NodeKind) -> &mut Self {
        let id = NodeId::new(path).expect("valid node path");
        self.nodes.push(RawNode {
            id,
            kind,
            attrs: Attrs::new(),
        });
        self
    }

    pub fn op(&mut self, path: &str, op_type: &str) -> &mut Self {
        self.add(path, NodeKind::op(op_type))
    }

    pub fn link(&mut self, src: &str, dst: &str) -> &mut Self {
        self.edges.push(RawEdge {
            src: NodeId::new(src).expect("valid node path"),
            dst: NodeId::new(dst).expect("valid node path"),
        });
        self
    }

    /// Nodes sorted by path and edges by `(src, dst)`.
    pub fn canonical(&self) -> RawGraph {
        let mut g = self.clone();
        g.nodes.sort_by(|a, b| a.id.cmp(&b.id));
        g.edges.sort();
        g
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let mut kinds: HashMap<&NodeId, &NodeKind> = HashMap::with_capacity(self.nodes.len());
        for n in &self.nodes {
            if n.id.is_root() {
                return Err(ModelError::InvalidPath(n.id.to_string()));
            }
            if n.kind.is_meta() {
                return Err(ModelError::MetaLeaf(n.id.to_string()));
            }
            if kinds.insert(&n.id, &n.kind).is_some() {
                return Err(ModelError::DuplicatePath(n.id.to_string()));
            }
        }
        // A leaf name must not double as a namespace of another leaf.
        let mut prefixes: BTreeSet<&str> = BTreeSet::new();
        for n in &self.nodes {
            let s = n.id.as_str();
            for (i, c) in s.char_indices() {
                if c == SEPARATOR {
                    prefixes.insert(&s[..i]);
                }
            }
        }
        for n in &self.nodes {
            if prefixes.contains(n.id.as_str()) {
                return Err(ModelError::PathConflict(n.id.to_string()));
            }
        }
        let mut seen = BTreeSet::new();
        for e in &self.edges {
            let err = |missing: &NodeId| ModelError::DanglingEdge {
                src: e.src.to_string(),
                dst: e.dst.to_string(),
                missing: missing.to_string(),
            };
            let sk = kinds.get(&e.src).ok_or_else(|| err(&e.src))?;
            let dk = kinds.get(&e.dst).ok_or_else(|| err(&e.dst))?;
            if sk.is_data() && dk.is_data() {
                return Err(ModelError::DataToDataEdge {
                    src: e.src.to_string(),
                    dst: e.dst.to_string(),
                });
            }
            if dk.is_data() {
                return Err(ModelError::EdgeIntoDataNode {
                    src: e.src.to_string(),
                    dst: e.dst.to_string(),
                });
            }
            if !seen.insert((&e.src, &e.dst)) {
                return Err(ModelError::DuplicateEdge {
                    src: e.src.to_string(),
                    dst: e.dst.to_string(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LayerClass {
    #[serde(rename = "CNNLayer")]
    Cnn,
    #[serde(rename = "RNNLayer")]
    Rnn,
    #[serde(rename = "FCLayer")]
    Fc,
    #[serde(rename = "NormalLayer")]
    Normal,
}

impl LayerClass {
    pub fn name(&self) -> &'static str {
        match self {
            LayerClass::Cnn => "CNNLayer",
            LayerClass::Rnn => "RNNLayer",
            LayerClass::Fc => "FCLayer",
            LayerClass::Normal => "NormalLayer",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeNode {
    /// Leaves keep their raw name; metanodes are identified by their tree path.
    pub id: NodeId,
    pub segment: String,
    pub parent: Option<NodeIx>,
    pub children: Vec<NodeIx>,
    pub kind: NodeKind,
    pub attrs: Attrs,
    pub depth: usize,
    pub descendant_count: usize,
    enter: usize,
    exit: usize,
}

/// Leaf placed at an explicit segment path. Used to (re)build trees.
#[derive(Clone, Debug)]
pub(crate) struct LeafEntry {
    pub id: NodeId,
    pub kind: NodeKind,
    pub attrs: Attrs,
    pub segments: Vec<String>,
}

/// Namespace hierarchy. Node 0 is the synthetic root `/`; nodes are stored
/// in preorder with children in natural segment order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HierarchyTree {
    nodes: Vec<TreeNode>,
    by_id: HashMap<NodeId, NodeIx>,
}

#[derive(Default)]
struct Trie {
    children: BTreeMap<String, Trie>,
    leaf: Option<LeafEntry>,
}

impl HierarchyTree {
    pub(crate) fn from_entries(entries: Vec<LeafEntry>) -> HierarchyTree {
        let leaf_ids: HashSet<NodeId> = entries.iter().map(|e| e.id.clone()).collect();
        let mut trie = Trie::default();
        for entry in entries {
            let mut cur = &mut trie;
            for seg in &entry.segments {
                cur = cur.children.entry(seg.clone()).or_default();
            }
            cur.leaf = Some(entry);
        }
        let mut tree = HierarchyTree {
            nodes: Vec::new(),
            by_id: HashMap::new(),
        };
        let mut path: Vec<String> = Vec::new();
        tree.flatten(trie, None, &mut path, &leaf_ids);
        tree.finish();
        tree
    }

    fn flatten(
        &mut self,
        trie: Trie,
        parent: Option<NodeIx>,
        path: &mut Vec<String>,
        leaf_ids: &HashSet<NodeId>,
    ) -> NodeIx {
        let ix = self.nodes.len();
        let segment = path.last().cloned().unwrap_or_default();
        let (id, kind, attrs) = match trie.leaf {
            Some(leaf) => (leaf.id, leaf.kind, leaf.attrs),
            None => {
                let mut id = NodeId::from_segments(path);
                // Tree edits can in principle reproduce a leaf's raw name.
                let mut n = 1;
                while self.by_id.contains_key(&id) || leaf_ids.contains(&id) {
                    id = NodeId(format!("{}~{}", NodeId::from_segments(path), n));
                    n += 1;
                }
                (id, NodeKind::Meta, Attrs::new())
            }
        };
        self.by_id.insert(id.clone(), ix);
        self.nodes.push(TreeNode {
            id,
            segment,
            parent,
            children: Vec::new(),
            kind,
            attrs,
            depth: path.len(),
            descendant_count: 0,
            enter: 0,
            exit: 0,
        });
        let mut keys: Vec<(String, Trie)> = trie.children.into_iter().collect();
        keys.sort_by(|a, b| natural_cmp(&a.0, &b.0));
        for (seg, child) in keys {
            path.push(seg);
            let c = self.flatten(child, Some(ix), path, leaf_ids);
            path.pop();
            self.nodes[ix].children.push(c);
        }
        ix
    }

    fn finish(&mut self) {
        // Preorder storage: descendants of i occupy i+1 ..= i+count.
        for i in (0..self.nodes.len()).rev() {
            let count: usize = self.nodes[i]
                .children
                .iter()
                .map(|&c| 1 + self.nodes[c].descendant_count)
                .sum();
            self.nodes[i].descendant_count = count;
            self.nodes[i].enter = i;
            self.nodes[i].exit = i + count;
        }
    }

    pub fn root(&self) -> NodeIx {
        0
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.len() <= 1
    }

    pub fn node(&self, ix: NodeIx) -> &TreeNode {
        &self.nodes[ix]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeIx, &TreeNode)> {
        self.nodes.iter().enumerate()
    }

    pub fn get(&self, id: &str) -> Option<NodeIx> {
        if id == "/" || id.is_empty() {
            return Some(0);
        }
        // NodeId hashing is by its string content.
        self.by_id.get(&NodeId(id.to_owned())).copied()
    }

    pub fn id(&self, ix: NodeIx) -> &NodeId {
        &self.nodes[ix].id
    }

    pub fn children(&self, ix: NodeIx) -> &[NodeIx] {
        &self.nodes[ix].children
    }

    pub fn parent(&self, ix: NodeIx) -> Option<NodeIx> {
        self.nodes[ix].parent
    }

    pub fn is_meta(&self, ix: NodeIx) -> bool {
        ix == 0 || self.nodes[ix].kind.is_meta()
    }

    pub fn depth(&self, ix: NodeIx) -> usize {
        self.nodes[ix].depth
    }

    /// Depth of the deepest node; 0 for an empty graph.
    pub fn max_depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// True when `a` is `b` or an ancestor of `b`.
    pub fn contains(&self, a: NodeIx, b: NodeIx) -> bool {
        let (na, nb) = (&self.nodes[a], &self.nodes[b]);
        na.enter <= nb.enter && nb.enter <= na.exit
    }

    /// Subtree of `ix` as a contiguous index range (preorder).
    pub fn subtree(&self, ix: NodeIx) -> std::ops::RangeInclusive<NodeIx> {
        ix..=self.nodes[ix].exit
    }

    pub fn ancestors(&self, ix: NodeIx) -> Ancestors<'_> {
        Ancestors {
            tree: self,
            next: self.nodes[ix].parent,
        }
    }

    pub fn lca(&self, a: NodeIx, b: NodeIx) -> NodeIx {
        let mut x = a;
        while !self.contains(x, b) {
            x = self.nodes[x].parent.expect("root contains every node");
        }
        x
    }

    /// The child of `ancestor` on the path down to `node`.
    pub fn child_toward(&self, ancestor: NodeIx, node: NodeIx) -> Option<NodeIx> {
        if ancestor == node || !self.contains(ancestor, node) {
            return None;
        }
        let mut x = node;
        while let Some(p) = self.nodes[x].parent {
            if p == ancestor {
                return Some(x);
            }
            x = p;
        }
        None
    }

    pub fn leaves(&self) -> impl Iterator<Item = NodeIx> + '_ {
        (1..self.nodes.len()).filter(move |&i| !self.nodes[i].kind.is_meta())
    }

    pub fn metanodes(&self) -> impl Iterator<Item = NodeIx> + '_ {
        (1..self.nodes.len()).filter(move |&i| self.nodes[i].kind.is_meta())
    }

    /// Number of nodes strictly below `meta` (metanodes and leaves).
    pub fn descendants(&self, meta: &str) -> Result<usize, ModelError> {
        let ix = self
            .get(meta)
            .ok_or_else(|| ModelError::UnknownNode(meta.to_owned()))?;
        if !self.is_meta(ix) {
            return Err(ModelError::NotAMetaNode(meta.to_owned()));
        }
        Ok(self.nodes[ix].descendant_count)
    }

    /// Segment path from the root down to `ix`.
    pub fn segment_path(&self, ix: NodeIx) -> Vec<String> {
        let mut segs: Vec<String> = std::iter::once(ix)
            .chain(self.ancestors(ix))
            .filter(|&i| i != 0)
            .map(|i| self.nodes[i].segment.clone())
            .collect();
        segs.reverse();
        segs
    }
}

pub struct Ancestors<'a> {
    tree: &'a HierarchyTree,
    next: Option<NodeIx>,
}

impl Iterator for Ancestors<'_> {
    type Item = NodeIx;
    fn next(&mut self) -> Option<NodeIx> {
        let cur = self.next?;
        self.next = self.tree.nodes[cur].parent;
        Some(cur)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Attachment {
    pub constants: Vec<NodeIx>,
    pub parameters: Vec<NodeIx>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LeafEdge {
    pub src: NodeIx,
    pub dst: NodeIx,
}

/// Hierarchy tree plus operation-level edges and data-node attachments.
/// Immutable once built.
#[derive(Clone, Debug)]
pub struct ProcessedGraph {
    pub name: String,
    pub tree: HierarchyTree,
    /// Operation-to-operation edges, ordered by `(src id, dst id)`.
    pub leaf_edges: Vec<LeafEdge>,
    /// Data nodes drawn on each operation. A data node feeding several
    /// operations is listed under each of them.
    pub attachments: BTreeMap<NodeIx, Attachment>,
    /// The logical owner of each attached data node: its first target.
    pub data_owner: BTreeMap<NodeIx, NodeIx>,
    out_adj: Vec<Vec<usize>>,
    in_adj: Vec<Vec<usize>>,
    data_edges: Vec<(NodeId, NodeId)>,
}

pub fn build_hierarchy(raw: &RawGraph) -> Result<ProcessedGraph, ModelError> {
    raw.validate()?;
    let entries = raw
        .nodes
        .iter()
        .map(|n| LeafEntry {
            id: n.id.clone(),
            kind: n.kind.clone(),
            attrs: n.attrs.clone(),
            segments: n.id.segments().map(str::to_owned).collect(),
        })
        .collect();
    let edges: Vec<(NodeId, NodeId)> = raw
        .edges
        .iter()
        .map(|e| (e.src.clone(), e.dst.clone()))
        .collect();
    Ok(ProcessedGraph::assemble(raw.name.clone(), entries, &edges))
}

impl ProcessedGraph {
    /// Builds the tree from leaf entries and classifies edges. Edge endpoints
    /// must be valid leaf ids.
    pub(crate) fn assemble(
        name: String,
        entries: Vec<LeafEntry>,
        edges: &[(NodeId, NodeId)],
    ) -> ProcessedGraph {
        let tree = HierarchyTree::from_entries(entries);
        let mut sorted: Vec<&(NodeId, NodeId)> = edges.iter().collect();
        sorted.sort();
        let mut leaf_edges = Vec::new();
        let mut data_targets: BTreeMap<NodeIx, Vec<NodeIx>> = BTreeMap::new();
        let mut data_edges = Vec::new();
        for (s, d) in sorted {
            let si = tree.get(s.as_str()).expect("edge source in tree");
            let di = tree.get(d.as_str()).expect("edge target in tree");
            if tree.node(si).kind.is_data() {
                data_targets.entry(si).or_default().push(di);
                data_edges.push((s.clone(), d.clone()));
            } else {
                leaf_edges.push(LeafEdge { src: si, dst: di });
            }
        }
        let mut attachments: BTreeMap<NodeIx, Attachment> = BTreeMap::new();
        let mut data_owner = BTreeMap::new();
        for (data, targets) in &data_targets {
            data_owner.insert(*data, targets[0]);
            for &op in targets {
                let slot = attachments.entry(op).or_default();
                match tree.node(*data).kind {
                    NodeKind::Constant => slot.constants.push(*data),
                    _ => slot.parameters.push(*data),
                }
            }
        }
        for a in attachments.values_mut() {
            a.constants.sort_by(|x, y| tree.id(*x).cmp(tree.id(*y)));
            a.parameters.sort_by(|x, y| tree.id(*x).cmp(tree.id(*y)));
        }
        let mut out_adj = vec![Vec::new(); tree.len()];
        let mut in_adj = vec![Vec::new(); tree.len()];
        for (i, e) in leaf_edges.iter().enumerate() {
            out_adj[e.src].push(i);
            in_adj[e.dst].push(i);
        }
        ProcessedGraph {
            name,
            tree,
            leaf_edges,
            attachments,
            data_owner,
            out_adj,
            in_adj,
            data_edges,
        }
    }

    /// Rebuilds this graph over a new placement of the same leaves.
    pub(crate) fn with_entries(&self, entries: Vec<LeafEntry>) -> ProcessedGraph {
        let mut edges: Vec<(NodeId, NodeId)> = self
            .leaf_edges
            .iter()
            .map(|e| (self.tree.id(e.src).clone(), self.tree.id(e.dst).clone()))
            .collect();
        edges.extend(self.data_edges.iter().cloned());
        ProcessedGraph::assemble(self.name.clone(), entries, &edges)
    }

    /// Outgoing leaf-edge indices of an operation node.
    pub fn out_edges(&self, ix: NodeIx) -> &[usize] {
        &self.out_adj[ix]
    }

    pub fn in_edges(&self, ix: NodeIx) -> &[usize] {
        &self.in_adj[ix]
    }

    pub fn edge_ids(&self, e: usize) -> (&NodeId, &NodeId) {
        let le = self.leaf_edges[e];
        (self.tree.id(le.src), self.tree.id(le.dst))
    }

    /// True if the data node is attached to some operation.
    pub fn is_attached(&self, ix: NodeIx) -> bool {
        self.data_owner.contains_key(&ix)
    }

    pub fn attachment(&self, op: NodeIx) -> Option<&Attachment> {
        self.attachments.get(&op)
    }

    /// Number of data nodes drawn on `op`.
    pub fn aux_count(&self, op: NodeIx) -> usize {
        self.attachments
            .get(&op)
            .map_or(0, |a| a.constants.len() + a.parameters.len())
    }

    /// Operation leaves in tree order.
    pub fn operations(&self) -> impl Iterator<Item = NodeIx> + '_ {
        self.tree
            .leaves()
            .filter(move |&i| self.tree.node(i).kind.is_operation())
    }

    /// Leaf set of the tree by id, for preservation checks.
    pub fn leaf_id_set(&self) -> BTreeSet<NodeId> {
        self.tree.leaves().map(|i| self.tree.id(i).clone()).collect()
    }

    /// Leaf edges by id, for preservation checks.
    pub fn leaf_edge_set(&self) -> BTreeSet<(NodeId, NodeId)> {
        (0..self.leaf_edges.len())
            .map(|e| {
                let (s, d) = self.edge_ids(e);
                (s.clone(), d.clone())
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pg(raw: &RawGraph) -> ProcessedGraph {
        build_hierarchy(raw).unwrap()
    }

    #[test]
    fn groups_by_prefix() {
        let mut raw = RawGraph::new("t");
        raw.op("A/x", "Add").op("A/y", "Add").op("B/z", "Mul").link("A/x", "B/z");
        let g = pg(&raw);
        assert_eq!(g.tree.descendants("A").unwrap(), 2);
        assert_eq!(g.tree.descendants("B").unwrap(), 1);
        assert_eq!(g.leaf_edges.len(), 1);
        let (s, d) = g.edge_ids(0);
        assert_eq!((s.as_str(), d.as_str()), ("A/x", "B/z"));
    }

    #[test]
    fn constants_become_attachments() {
        let mut raw = RawGraph::new("t");
        raw.op("M/op1", "Conv2D")
            .add("M/c1", NodeKind::Constant)
            .link("M/c1", "M/op1");
        let g = pg(&raw);
        assert!(g.leaf_edges.is_empty());
        let op = g.tree.get("M/op1").unwrap();
        let c = g.tree.get("M/c1").unwrap();
        assert_eq!(g.attachment(op).unwrap().constants, vec![c]);
        assert!(g.attachment(op).unwrap().parameters.is_empty());
    }

    #[test]
    fn rejects_data_to_data() {
        let mut raw = RawGraph::new("t");
        raw.add("a", NodeKind::Constant)
            .add("b", NodeKind::Constant)
            .link("a", "b");
        assert!(matches!(
            build_hierarchy(&raw),
            Err(ModelError::DataToDataEdge { .. })
        ));
    }

    #[test]
    fn rejects_duplicates_and_dangling() {
        let mut raw = RawGraph::new("t");
        raw.op("a", "X").op("a", "Y");
        assert!(matches!(
            build_hierarchy(&raw),
            Err(ModelError::DuplicatePath(_))
        ));
        let mut raw = RawGraph::new("t");
        raw.op("a", "X").link("a", "b");
        assert!(matches!(
            build_hierarchy(&raw),
            Err(ModelError::DanglingEdge { .. })
        ));
        let mut raw = RawGraph::new("t");
        raw.op("a", "X").op("a/b", "Y");
        assert!(matches!(
            build_hierarchy(&raw),
            Err(ModelError::PathConflict(_))
        ));
    }

    #[test]
    fn descendants_count_metanodes_too() {
        let mut raw = RawGraph::new("t");
        raw.op("A/B/x", "X").op("A/B/y", "X").op("A/z", "X");
        let g = pg(&raw);
        assert_eq!(g.tree.descendants("A").unwrap(), 4);
        assert_eq!(g.tree.descendants("/").unwrap(), g.tree.len() - 1);
        assert!(matches!(
            g.tree.descendants("A/z"),
            Err(ModelError::NotAMetaNode(_))
        ));
    }

    #[test]
    fn natural_child_order() {
        let mut raw = RawGraph::new("t");
        raw.op("net/10_Features/x", "X")
            .op("net/2_Features/x", "X")
            .op("net/1_Features/x", "X");
        let g = pg(&raw);
        let net = g.tree.get("net").unwrap();
        let segs: Vec<&str> = g
            .tree
            .children(net)
            .iter()
            .map(|&c| g.tree.node(c).segment.as_str())
            .collect();
        assert_eq!(segs, ["1_Features", "2_Features", "10_Features"]);
    }

    #[test]
    fn natural_cmp_is_total() {
        assert_eq!(natural_cmp("a2", "a10"), Ordering::Less);
        assert_eq!(natural_cmp("a01", "a1"), Ordering::Less);
        assert_eq!(natural_cmp("a1", "a01"), Ordering::Greater);
        assert_eq!(natural_cmp("x", "x"), Ordering::Equal);
        assert_eq!(natural_cmp("", "a"), Ordering::Less);
    }

    #[test]
    fn fan_out_data_is_shared() {
        let mut raw = RawGraph::new("t");
        raw.op("a", "MatMul")
            .op("b", "MatMul")
            .add("w", NodeKind::Parameter)
            .link("w", "a")
            .link("w", "b");
        let g = pg(&raw);
        let (a, b, w) = (
            g.tree.get("a").unwrap(),
            g.tree.get("b").unwrap(),
            g.tree.get("w").unwrap(),
        );
        assert_eq!(g.data_owner[&w], a);
        assert_eq!(g.attachment(a).unwrap().parameters, vec![w]);
        assert_eq!(g.attachment(b).unwrap().parameters, vec![w]);
    }

    #[test]
    fn invalid_paths() {
        assert!(NodeId::new("").is_err());
        assert!(NodeId::new("a//b").is_err());
        assert!(NodeId::new("/a").is_err());
        assert!(NodeId::new("a/b").is_ok());
    }
}
