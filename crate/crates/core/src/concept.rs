//! Concept graph mode.
//!
//! Grouping operators by namespace can produce directed cycles between
//! metanodes even though the operator graph itself is acyclic. This module
//! detects such cycles among the top-level metanodes and removes them by
//! splitting metanodes in two, following a topological traversal of the
//! operators: a metanode that the traversal leaves and later re-enters is
//! cut at the point where it was first left. Metanodes are also classified
//! into coarse DNN layer types.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, HashSet};
use std::cmp::Reverse;

use serde::Serialize;

use crate::error::ModelError;
use crate::frontier::Frontier;
use crate::model::{LayerClass, LeafEntry, NodeIx, ProcessedGraph};

/// Splitting doubles metanodes per round, so it is bounded.
pub const MAX_PASSES: usize = 2;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InducedEdge {
    pub src: NodeIx,
    pub dst: NodeIx,
    /// Leaf-edge indices lifted onto this edge.
    pub contributors: Vec<usize>,
}

/// Lifts leaf edges onto the frontier. Edges inside a single frontier node
/// vanish; parallel lifts are merged.
pub fn induced_edges(pg: &ProcessedGraph, frontier: &Frontier) -> Vec<InducedEdge> {
    let mut map: BTreeMap<(NodeIx, NodeIx), Vec<usize>> = BTreeMap::new();
    for (i, e) in pg.leaf_edges.iter().enumerate() {
        let (Some(s), Some(d)) = (frontier.rep(e.src), frontier.rep(e.dst)) else {
            continue;
        };
        if s != d {
            map.entry((s, d)).or_default().push(i);
        }
    }
    map.into_iter()
        .map(|((src, dst), contributors)| InducedEdge {
            src,
            dst,
            contributors,
        })
        .collect()
}

/// Same as [`induced_edges`] for an explicit antichain of tree nodes.
pub fn induced_edges_at(
    pg: &ProcessedGraph,
    nodes: &[NodeIx],
) -> Result<Vec<InducedEdge>, ModelError> {
    let f = Frontier::from_nodes(pg, nodes)?;
    Ok(induced_edges(pg, &f))
}

/// Tarjan's algorithm, iterative. Components come out in reverse
/// topological order of the condensation.
pub fn strongly_connected_components(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut out = Vec::new();
    let mut next = 0;
    let mut call: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        call.push((root, 0));
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if *pos < adj[v].len() {
                let w = adj[v][*pos];
                *pos += 1;
                if index[w] == UNSEEN {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    out.push(comp);
                }
            }
        }
    }
    out
}

/// Components with more than one member (self loops never occur in
/// induced graphs).
fn cyclic_components(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    strongly_connected_components(adj)
        .into_iter()
        .filter(|c| c.len() > 1)
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Split {
    pub original: String,
    pub parts: [String; 2],
    /// Children of the original placed in each part. A child whose leaves
    /// fall on both sides is split too and listed in both.
    pub children: [Vec<String>; 2],
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CycleReport {
    /// Cyclic components among top-level nodes before any split.
    pub cycles_found: usize,
    pub splits: Vec<Split>,
    pub passes: usize,
    /// Cyclic components left after the last pass.
    pub residual_cycles: usize,
    /// True when cycles remained after [`MAX_PASSES`] passes.
    pub iteration_cap_exceeded: bool,
}

/// Top-level grouping of operations used while splitting within one pass.
struct Grouping {
    group_of: Vec<usize>,
    count: usize,
}

impl Grouping {
    fn adjacency(&self, pg: &ProcessedGraph) -> Vec<Vec<usize>> {
        let mut set: BTreeSet<(usize, usize)> = BTreeSet::new();
        for e in &pg.leaf_edges {
            let (a, b) = (self.group_of[e.src], self.group_of[e.dst]);
            if a != b && a != usize::MAX && b != usize::MAX {
                set.insert((a, b));
            }
        }
        let mut adj = vec![Vec::new(); self.count];
        for (a, b) in set {
            adj[a].push(b);
        }
        adj
    }
}

/// Operation visiting order: topological, preferring to stay inside the
/// top-level group of the previously visited operation. Operations whose only
/// inputs are data nodes (or nothing) start the traversal.
fn traversal_order(pg: &ProcessedGraph, group_of: &[usize]) -> Vec<NodeIx> {
    let ops: Vec<NodeIx> = pg.operations().collect();
    let mut indeg: HashMap<NodeIx, usize> = ops.iter().map(|&o| (o, pg.in_edges(o).len())).collect();
    let mut visited: HashSet<NodeIx> = HashSet::with_capacity(ops.len());
    let mut global: BinaryHeap<Reverse<NodeIx>> = BinaryHeap::new();
    let mut per_group: HashMap<usize, BinaryHeap<Reverse<NodeIx>>> = HashMap::new();
    let push = |o: NodeIx,
                global: &mut BinaryHeap<Reverse<NodeIx>>,
                per_group: &mut HashMap<usize, BinaryHeap<Reverse<NodeIx>>>| {
        global.push(Reverse(o));
        per_group.entry(group_of[o]).or_default().push(Reverse(o));
    };
    for &o in &ops {
        if indeg[&o] == 0 {
            push(o, &mut global, &mut per_group);
        }
    }
    let mut order = Vec::with_capacity(ops.len());
    let mut current: Option<usize> = None;
    let mut remaining: BTreeSet<NodeIx> = ops.iter().copied().collect();
    while order.len() < ops.len() {
        let mut pick = None;
        if let Some(g) = current {
            if let Some(h) = per_group.get_mut(&g) {
                while let Some(Reverse(o)) = h.pop() {
                    if !visited.contains(&o) {
                        pick = Some(o);
                        break;
                    }
                }
            }
        }
        if pick.is_none() {
            while let Some(Reverse(o)) = global.pop() {
                if !visited.contains(&o) {
                    pick = Some(o);
                    break;
                }
            }
        }
        // Leaf-level cycle: release the unvisited op with the fewest
        // pending inputs.
        let o = pick.unwrap_or_else(|| {
            *remaining
                .iter()
                .min_by_key(|&&o| (indeg[&o], o))
                .expect("unvisited operations remain")
        });
        visited.insert(o);
        remaining.remove(&o);
        order.push(o);
        current = Some(group_of[o]);
        for &e in pg.out_edges(o) {
            let d = pg.leaf_edges[e].dst;
            if visited.contains(&d) {
                continue;
            }
            let c = indeg.get_mut(&d).unwrap();
            *c -= 1;
            if *c == 0 {
                push(d, &mut global, &mut per_group);
            }
        }
    }
    order
}

fn unique_segment(base: String, taken: &mut BTreeSet<String>) -> String {
    if taken.insert(base.clone()) {
        return base;
    }
    let mut n = 2;
    loop {
        let s = format!("{base}_{n}");
        if taken.insert(s.clone()) {
            return s;
        }
        n += 1;
    }
}

/// Part index of every operation, given per-group cut times.
fn part_ids(group_of: &[usize], time: &[usize], cuts: &[Vec<usize>], ops: &[NodeIx]) -> HashMap<NodeIx, (usize, usize)> {
    ops.iter()
        .map(|&o| {
            let g = group_of[o];
            let k = cuts[g].iter().filter(|&&c| c <= time[o]).count();
            (o, (g, k))
        })
        .collect()
}

/// Operations in a nontrivial strongly connected component of the graph
/// induced on the current parts.
fn cyclic_parts(pg: &ProcessedGraph, parts: &HashMap<NodeIx, (usize, usize)>) -> HashSet<(usize, usize)> {
    let mut ids: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for &p in parts.values() {
        let n = ids.len();
        ids.entry(p).or_insert(n);
    }
    let mut set: BTreeSet<(usize, usize)> = BTreeSet::new();
    for e in &pg.leaf_edges {
        let (a, b) = (ids[&parts[&e.src]], ids[&parts[&e.dst]]);
        if a != b {
            set.insert((a, b));
        }
    }
    let mut adj = vec![Vec::new(); ids.len()];
    for (a, b) in set {
        adj[a].push(b);
    }
    let back: HashMap<usize, (usize, usize)> = ids.iter().map(|(&p, &i)| (i, p)).collect();
    cyclic_components(&adj)
        .into_iter()
        .flatten()
        .map(|i| back[&i])
        .collect()
}

/// One traversal plus the splits it justifies. Returns `None` when the
/// top level is already acyclic.
///
/// Every re-entry into an already exited top-level group is a candidate
/// cut. Candidates are taken latest first; the part holding the re-entered
/// operation is cut there if it is still on a cycle.
fn split_pass(pg: &ProcessedGraph, report: &mut CycleReport) -> Option<ProcessedGraph> {
    let tree = &pg.tree;
    let top: Vec<NodeIx> = tree.children(0).to_vec();
    let mut group_of = vec![usize::MAX; tree.len()];
    for (g, &t) in top.iter().enumerate() {
        for ix in tree.subtree(t) {
            group_of[ix] = g;
        }
    }
    let grouping = Grouping {
        group_of: group_of.clone(),
        count: top.len(),
    };
    if cyclic_components(&grouping.adjacency(pg)).is_empty() {
        return None;
    }
    let order = traversal_order(pg, &group_of);
    let mut time = vec![usize::MAX; tree.len()];
    let mut seen = vec![false; top.len()];
    let mut events = Vec::new();
    let mut prev: Option<usize> = None;
    for (t, &op) in order.iter().enumerate() {
        time[op] = t;
        let g = group_of[op];
        if prev != Some(g) && seen[g] && tree.is_meta(top[g]) {
            events.push((t, g));
        }
        seen[g] = true;
        prev = Some(g);
    }

    let mut cuts: Vec<Vec<usize>> = vec![Vec::new(); top.len()];
    let mut parts = part_ids(&group_of, &time, &cuts, &order);
    let mut cyclic = cyclic_parts(pg, &parts);
    for &(t, g) in events.iter().rev() {
        if !cyclic.contains(&parts[&order[t]]) {
            continue;
        }
        cuts[g].push(t);
        cuts[g].sort_unstable();
        parts = part_ids(&group_of, &time, &cuts, &order);
        cyclic = cyclic_parts(pg, &parts);
        if cyclic.is_empty() {
            break;
        }
    }
    if cuts.iter().all(Vec::is_empty) {
        return Some(pg.clone());
    }

    // Part index of every leaf in a cut group; data leaves follow their
    // owner, or the first part when the owner lies elsewhere.
    let mut part_of: Vec<Option<usize>> = vec![None; tree.len()];
    for (g, &root) in top.iter().enumerate() {
        if cuts[g].is_empty() {
            continue;
        }
        for ix in tree.subtree(root) {
            let node = tree.node(ix);
            if node.kind.is_meta() {
                continue;
            }
            let op = if node.kind.is_operation() {
                Some(ix)
            } else {
                pg.data_owner.get(&ix).copied().filter(|o| tree.contains(root, *o))
            };
            part_of[ix] = Some(op.map_or(0, |o| parts[&o].1));
        }
    }

    // Rebuild leaf placements. A metanode whose leaves fall into several
    // parts is replaced by one metanode per part, named after the first
    // child holding leaves of that part.
    let mut mixed: HashMap<NodeIx, BTreeSet<usize>> = HashMap::new();
    for ix in tree.leaves() {
        if let Some(k) = part_of[ix] {
            for a in tree.ancestors(ix) {
                if a == 0 {
                    break;
                }
                mixed.entry(a).or_default().insert(k);
            }
        }
    }
    let is_mixed = |ix: NodeIx| mixed.get(&ix).is_some_and(|m| m.len() > 1);
    let holds = |c: NodeIx, k: usize| {
        if tree.is_meta(c) {
            mixed.get(&c).is_some_and(|m| m.contains(&k))
        } else {
            part_of[c] == Some(k)
        }
    };
    // New segment for (metanode, part), resolved top-down so sibling
    // collisions see already-renamed siblings.
    let mut renamed: HashMap<(NodeIx, usize), String> = HashMap::new();
    let mut taken_under: HashMap<NodeIx, BTreeSet<String>> = HashMap::new();
    for ix in 1..tree.len() {
        if !tree.is_meta(ix) || !is_mixed(ix) {
            continue;
        }
        let parent = tree.parent(ix).unwrap();
        let taken = taken_under.entry(parent).or_insert_with(|| {
            tree.children(parent)
                .iter()
                .filter(|&&c| !is_mixed(c))
                .map(|&c| tree.node(c).segment.clone())
                .collect()
        });
        for &k in &mixed[&ix] {
            let first_child = tree
                .children(ix)
                .iter()
                .find(|&&c| holds(c, k))
                .map(|&c| tree.node(c).segment.clone())
                .unwrap_or_default();
            let base = format!("{}_{}", tree.node(ix).segment, first_child);
            renamed.insert((ix, k), unique_segment(base, taken));
        }
    }
    for (g, &root) in top.iter().enumerate() {
        for j in 0..cuts[g].len() {
            let side = |k: usize| {
                tree.children(root)
                    .iter()
                    .filter(|&&c| holds(c, k))
                    .map(|&c| tree.id(c).to_string())
                    .collect::<Vec<_>>()
            };
            report.splits.push(Split {
                original: tree.id(root).to_string(),
                parts: [renamed[&(root, j)].clone(), renamed[&(root, j + 1)].clone()],
                children: [side(j), side(j + 1)],
            });
        }
    }
    let entries: Vec<LeafEntry> = tree
        .leaves()
        .map(|leaf| {
            let node = tree.node(leaf);
            let part = part_of[leaf];
            let mut chain: Vec<NodeIx> = std::iter::once(leaf)
                .chain(tree.ancestors(leaf))
                .filter(|&a| a != 0)
                .collect();
            chain.reverse();
            let segments = chain
                .iter()
                .map(|&a| match part {
                    Some(k) if is_mixed(a) => renamed[&(a, k)].clone(),
                    _ => tree.node(a).segment.clone(),
                })
                .collect();
            LeafEntry {
                id: node.id.clone(),
                kind: node.kind.clone(),
                attrs: node.attrs.clone(),
                segments,
            }
        })
        .collect();
    Some(pg.with_entries(entries))
}

fn top_level_cycles(pg: &ProcessedGraph) -> usize {
    let f = Frontier::top_level(pg);
    let pos: HashMap<NodeIx, usize> = f.nodes().iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let mut adj = vec![Vec::new(); f.nodes().len()];
    for e in induced_edges(pg, &f) {
        adj[pos[&e.src]].push(pos[&e.dst]);
    }
    cyclic_components(&adj).len()
}

/// Splits top-level metanodes until the top-level induced graph is acyclic
/// or [`MAX_PASSES`] traversals have run. Leaves and leaf edges are kept.
pub fn detect_and_split_cycles(pg: &ProcessedGraph) -> (ProcessedGraph, CycleReport) {
    let mut report = CycleReport {
        cycles_found: top_level_cycles(pg),
        ..Default::default()
    };
    let mut current = pg.clone();
    if report.cycles_found == 0 {
        return (current, report);
    }
    for _ in 0..MAX_PASSES {
        report.passes += 1;
        match split_pass(&current, &mut report) {
            None => break,
            Some(next) => current = next,
        }
        if top_level_cycles(&current) == 0 {
            break;
        }
    }
    report.residual_cycles = top_level_cycles(&current);
    report.iteration_cap_exceeded = report.residual_cycles > 0;
    (current, report)
}

const CNN_MARKERS: &[&str] = &["conv"];
const RNN_MARKERS: &[&str] = &["lstm", "gru", "rnn"];
const FC_MARKERS: &[&str] = &["matmul", "dense", "gemm"];

fn has_marker(op_types: &BTreeSet<String>, markers: &[&str]) -> bool {
    op_types.iter().any(|t| markers.iter().any(|m| t.contains(m)))
}

/// Layer class from the set of descendant operation types.
pub fn classify_op_types<'a>(types: impl IntoIterator<Item = &'a str>) -> LayerClass {
    let lower: BTreeSet<String> = types.into_iter().map(str::to_ascii_lowercase).collect();
    if has_marker(&lower, CNN_MARKERS) {
        LayerClass::Cnn
    } else if has_marker(&lower, RNN_MARKERS) {
        LayerClass::Rnn
    } else if has_marker(&lower, FC_MARKERS) {
        LayerClass::Fc
    } else {
        LayerClass::Normal
    }
}

pub fn classify_layers(pg: &ProcessedGraph) -> BTreeMap<NodeIx, LayerClass> {
    let tree = &pg.tree;
    tree.metanodes()
        .map(|m| {
            let types = tree
                .subtree(m)
                .filter_map(|ix| tree.node(ix).kind.op_type());
            (m, classify_op_types(types))
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct ConceptGraph {
    pub graph: ProcessedGraph,
    pub layer_class: BTreeMap<NodeIx, LayerClass>,
    pub report: CycleReport,
}

pub fn build_concept_graph(pg: &ProcessedGraph) -> ConceptGraph {
    let (graph, report) = detect_and_split_cycles(pg);
    let layer_class = classify_layers(&graph);
    ConceptGraph {
        graph,
        layer_class,
        report,
    }
}
