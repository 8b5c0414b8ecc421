//! Shared test support: the bundled fixtures, a random hierarchical graph
//! generator, and oracles that recompute expected results without going
//! through the engine's own algorithms.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::path::PathBuf;

use cgs_core::iso::{strip_numbering, IsoGroup};
use cgs_core::layout::{LayoutResult, LayoutParams};
use cgs_core::model::NodeKind;
use cgs_core::prune::{Chain, Endpoint, VisibleEdge};
use cgs_core::synth::{bert_like, resnet_like};
use cgs_core::{build_hierarchy, parse_graph_file, Frontier, NodeIx, ProcessedGraph, RawGraph, SessionOptions, VisibleGraph};
use petgraph::graph::DiGraph;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FIXTURES: [&str; 4] = ["lenet", "cycle", "port_design", "iso_branches"];

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

pub fn fixture_path(name: &str) -> PathBuf {
    fixture_dir().join(format!("{name}.json"))
}

pub fn load(name: &str) -> RawGraph {
    let bytes = std::fs::read(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    parse_graph_file(&bytes).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Every bundled fixture plus the two synthetic presets.
pub fn all_fixtures() -> Vec<(String, RawGraph)> {
    let mut out: Vec<(String, RawGraph)> = FIXTURES.iter().map(|n| (n.to_string(), load(n))).collect();
    out.push(("resnet_like".into(), resnet_like()));
    out.push(("bert_like".into(), bert_like(2)));
    out
}

/// Module threshold that makes modules appear in small fixtures.
pub fn threshold_for(name: &str) -> usize {
    match name {
        "port_design" => 4,
        "lenet" | "cycle" | "iso_branches" => 3,
        _ => cgs_core::prune::DEFAULT_THRESHOLD,
    }
}

/// A representative set of expansion states: top level, each depth, full
/// expansion, and each metanode expanded alone.
pub fn frontiers(pg: &ProcessedGraph) -> Vec<Frontier> {
    let tree = &pg.tree;
    let max_depth = (0..tree.len()).map(|i| tree.depth(i)).max().unwrap_or(1);
    let mut out = vec![Frontier::top_level(pg)];
    for d in 2..=max_depth {
        out.push(Frontier::to_depth(pg, d));
    }
    out.push(Frontier::full(pg));
    let metas: Vec<NodeIx> = tree.metanodes().collect();
    for &m in metas.iter().take(12) {
        out.push(Frontier::from_expanded(pg, tree.ancestors(m).collect::<Vec<_>>()));
    }
    out
}

/// A random graph of at most `max_leaves` operations under a random
/// namespace tree. The leaf graph is a DAG; groups ignore the topological
/// order, so grouping-induced cycles are common.
pub fn random_hierarchical_dag(seed: u64, max_leaves: usize) -> RawGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=max_leaves.max(2));
    let groups = rng.gen_range(2..=6usize);
    let mut names = Vec::with_capacity(n);
    let mut g = RawGraph::new(format!("random{seed}"));
    for i in 0..n {
        let mut path = format!("g{}", rng.gen_range(0..groups));
        let depth = rng.gen_range(0..=2);
        for _ in 0..depth {
            path.push_str(&format!("/s{}", rng.gen_range(0..3)));
        }
        let name = format!("{path}/op{i}");
        let ty = ["Conv2D", "ReLU", "MatMul", "Add", "BatchNorm"][rng.gen_range(0..5)];
        g.op(&name, ty);
        names.push(name);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut edges = BTreeSet::new();
    for k in 1..n {
        let preds = rng.gen_range(1..=2usize);
        for _ in 0..preds {
            let back = rng.gen_range(1..=k.min(6));
            edges.insert((order[k - back], order[k]));
        }
    }
    for (a, b) in edges {
        g.link(&names[a], &names[b]);
    }
    if n > 4 {
        let target = &names[rng.gen_range(0..n)];
        let p = format!("{}_weight", target);
        g.add(&p, NodeKind::Parameter);
        g.link(&p, target);
    }
    g
}

/// Whether the operation-level graph has no directed cycle.
pub fn leaf_graph_acyclic(pg: &ProcessedGraph) -> bool {
    let mut g: DiGraph<(), ()> = DiGraph::new();
    let nodes: Vec<_> = (0..pg.tree.len()).map(|_| g.add_node(())).collect();
    for e in &pg.leaf_edges {
        g.add_edge(nodes[e.src], nodes[e.dst], ());
    }
    !petgraph::algo::is_cyclic_directed(&g)
}

/// Whether the graph induced on depth-1 nodes has no directed cycle.
pub fn top_level_acyclic(pg: &ProcessedGraph) -> bool {
    let tree = &pg.tree;
    let top = |mut x: NodeIx| {
        while let Some(p) = tree.parent(x) {
            if p == 0 {
                return x;
            }
            x = p;
        }
        x
    };
    let mut g: DiGraph<NodeIx, ()> = DiGraph::new();
    let mut ix = HashMap::new();
    for &c in tree.children(0) {
        ix.insert(c, g.add_node(c));
    }
    for e in &pg.leaf_edges {
        let (a, b) = (top(e.src), top(e.dst));
        if a != b {
            g.update_edge(ix[&a], ix[&b], ());
        }
    }
    !petgraph::algo::is_cyclic_directed(&g)
}

/// Operation leaves a tree node stands for (data nodes stand for the
/// operations they feed).
pub fn op_leaves(pg: &ProcessedGraph, ix: NodeIx) -> Vec<NodeIx> {
    let tree = &pg.tree;
    match &tree.node(ix).kind {
        NodeKind::Operation { .. } => vec![ix],
        NodeKind::Meta => {
            let mut out = Vec::new();
            let mut stack = vec![ix];
            while let Some(x) = stack.pop() {
                if tree.node(x).kind.is_operation() {
                    out.push(x);
                }
                stack.extend(tree.children(x).iter().copied());
            }
            out.sort_unstable();
            out
        }
        _ => pg
            .attachments
            .iter()
            .filter(|(_, a)| a.constants.contains(&ix) || a.parameters.contains(&ix))
            .map(|(&op, _)| op)
            .collect(),
    }
}

/// Reflexive-transitive reachability between operation leaves, by BFS.
pub struct Reach {
    sets: HashMap<NodeIx, HashSet<NodeIx>>,
}

impl Reach {
    pub fn new(pg: &ProcessedGraph) -> Self {
        let mut adj: HashMap<NodeIx, Vec<NodeIx>> = HashMap::new();
        for e in &pg.leaf_edges {
            adj.entry(e.src).or_default().push(e.dst);
        }
        let ops: Vec<NodeIx> = (0..pg.tree.len()).filter(|&i| pg.tree.node(i).kind.is_operation()).collect();
        let sets = ops
            .iter()
            .map(|&s| {
                let mut seen = HashSet::from([s]);
                let mut q = VecDeque::from([s]);
                while let Some(u) = q.pop_front() {
                    for &v in adj.get(&u).into_iter().flatten() {
                        if seen.insert(v) {
                            q.push_back(v);
                        }
                    }
                }
                (s, seen)
            })
            .collect();
        Reach { sets }
    }

    pub fn leaf(&self, u: NodeIx, v: NodeIx) -> bool {
        self.sets.get(&u).is_some_and(|s| s.contains(&v))
    }

    /// Whether some operation under `a` reaches some operation under `b`.
    pub fn nodes(&self, pg: &ProcessedGraph, a: NodeIx, b: NodeIx) -> bool {
        if a == b {
            return true;
        }
        let targets = op_leaves(pg, b);
        op_leaves(pg, a).iter().any(|&u| targets.iter().any(|&v| self.leaf(u, v)))
    }
}

/// The frontier node covering `ix`, found by walking up the tree.
pub fn cover(pg: &ProcessedGraph, frontier: &HashSet<NodeIx>, ix: NodeIx) -> Option<NodeIx> {
    let mut x = ix;
    loop {
        if frontier.contains(&x) {
            return Some(x);
        }
        x = pg.tree.parent(x)?;
    }
}

/// Checks that contributors and chains account for every leaf edge exactly
/// once and that each chain is a connected walk between the visible nodes
/// standing for the edge's endpoints.
pub fn check_conservation(
    pg: &ProcessedGraph,
    edges: &[VisibleEdge],
    chains: &[Chain],
    rep: impl Fn(NodeIx) -> NodeIx,
) -> Result<(), String> {
    if chains.len() != pg.leaf_edges.len() {
        return Err(format!("{} chains for {} leaf edges", chains.len(), pg.leaf_edges.len()));
    }
    // contributor multiset, non-hidden edges only: each drawn leaf edge once
    let mut drawn: BTreeMap<usize, usize> = BTreeMap::new();
    let mut all: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (i, e) in edges.iter().enumerate() {
        if e.contributors.is_empty() {
            return Err(format!("visible edge {i} has no contributors"));
        }
        for &c in &e.contributors {
            *all.entry((i, c)).or_default() += 1;
            if !e.is_hidden() {
                *drawn.entry(c).or_default() += 1;
            }
        }
    }
    if let Some(((i, c), _)) = all.iter().find(|(_, &k)| k > 1) {
        return Err(format!("leaf edge {c} listed twice on visible edge {i}"));
    }
    for (le, chain) in chains.iter().enumerate() {
        let e = pg.leaf_edges[le];
        let (a, b) = (rep(e.src), rep(e.dst));
        match chain {
            Chain::Internal => {
                if a != b {
                    return Err(format!("leaf edge {le} internal but reps differ"));
                }
                if drawn.contains_key(&le) {
                    return Err(format!("internal leaf edge {le} is drawn"));
                }
            }
            c => {
                if drawn.get(&le) != Some(&1) {
                    return Err(format!("leaf edge {le} drawn {:?} times", drawn.get(&le)));
                }
                let ids = c.edges();
                for &v in &ids {
                    if !edges[v].contributors.contains(&le) {
                        return Err(format!("chain of {le} uses edge {v} without contributing"));
                    }
                }
                let first = &edges[ids[0]];
                let last = &edges[*ids.last().unwrap()];
                if first.src.node() != a || last.dst.node() != b {
                    return Err(format!("chain of {le} does not join its endpoints' representatives"));
                }
                for w in ids.windows(2) {
                    if edges[w[0]].dst != edges[w[1]].src {
                        return Err(format!("chain of {le} breaks between {} and {}", w[0], w[1]));
                    }
                }
            }
        }
    }
    // every contribution is backed by the contributor's chain
    for (&(i, c), _) in &all {
        if !chains[c].edges().contains(&i) {
            return Err(format!("edge {i} lists {c} but the chain does not pass it"));
        }
    }
    Ok(())
}

fn closure(adj: &BTreeMap<NodeIx, BTreeSet<NodeIx>>, s: NodeIx) -> BTreeSet<NodeIx> {
    let mut seen = BTreeSet::from([s]);
    let mut q = vec![s];
    while let Some(u) = q.pop() {
        for &v in adj.get(&u).into_iter().flatten() {
            if seen.insert(v) {
                q.push(v);
            }
        }
    }
    seen
}

/// Pairwise check that reachability over the drawn chains equals
/// reachability in the leaf graph lifted onto visible nodes, and that every
/// leaf-level path survives the lift.
pub fn check_lifted_reachability(vis: &VisibleGraph, reach: &Reach) -> Result<(), String> {
    let pg = &*vis.graph;
    let st = vis.stacked();
    let rep = |x: NodeIx| vis.visible_rep(x).expect("operation has a representative");
    let mut chain_adj: BTreeMap<NodeIx, BTreeSet<NodeIx>> = BTreeMap::new();
    let mut lifted: BTreeMap<NodeIx, BTreeSet<NodeIx>> = BTreeMap::new();
    for (i, e) in pg.leaf_edges.iter().enumerate() {
        let (a, b) = (rep(e.src), rep(e.dst));
        if a != b {
            lifted.entry(a).or_default().insert(b);
        }
        let ids = st.chains[i].edges();
        if let (Some(&f), Some(&l)) = (ids.first(), ids.last()) {
            chain_adj
                .entry(st.edges[f].src.node())
                .or_default()
                .insert(st.edges[l].dst.node());
        }
    }
    let nodes: BTreeSet<NodeIx> = st.nodes.iter().copied().collect();
    for &a in &nodes {
        let via_chain = closure(&chain_adj, a);
        let via_leaf = closure(&lifted, a);
        if via_chain != via_leaf {
            return Err(format!("reachability from {} differs", pg.tree.id(a)));
        }
    }
    let ops: Vec<NodeIx> = (0..pg.tree.len()).filter(|&i| pg.tree.node(i).kind.is_operation()).collect();
    let mut memo: HashMap<NodeIx, BTreeSet<NodeIx>> = HashMap::new();
    for &u in &ops {
        let ru = rep(u);
        let reach_u = memo.entry(ru).or_insert_with(|| closure(&chain_adj, ru)).clone();
        for &v in &ops {
            if reach.leaf(u, v) && !reach_u.contains(&rep(v)) {
                return Err(format!("{} reaches {} but not after lifting", pg.tree.id(u), pg.tree.id(v)));
            }
        }
    }
    Ok(())
}

/// A node-labelled digraph for the isomorphism oracle.
#[derive(Clone, Debug, Default)]
pub struct Labeled {
    pub labels: Vec<String>,
    pub edges: BTreeSet<(usize, usize)>,
}

/// Exhaustive label-preserving isomorphism test.
pub fn isomorphic(a: &Labeled, b: &Labeled) -> bool {
    let n = a.labels.len();
    if n != b.labels.len() || a.edges.len() != b.edges.len() {
        return false;
    }
    let mut la = a.labels.clone();
    let mut lb = b.labels.clone();
    la.sort();
    lb.sort();
    if la != lb {
        return false;
    }
    fn extend(a: &Labeled, b: &Labeled, map: &mut Vec<usize>, used: &mut Vec<bool>) -> bool {
        let i = map.len();
        if i == a.labels.len() {
            return a.edges.iter().all(|&(x, y)| b.edges.contains(&(map[x], map[y])));
        }
        for j in 0..b.labels.len() {
            if used[j] || a.labels[i] != b.labels[j] {
                continue;
            }
            let ok = (0..i).all(|k| {
                a.edges.contains(&(k, i)) == b.edges.contains(&(map[k], j))
                    && a.edges.contains(&(i, k)) == b.edges.contains(&(j, map[k]))
            }) && a.edges.contains(&(i, i)) == b.edges.contains(&(j, j));
            if ok {
                used[j] = true;
                map.push(j);
                if extend(a, b, map, used) {
                    return true;
                }
                map.pop();
                used[j] = false;
            }
        }
        false
    }
    extend(a, b, &mut Vec::new(), &mut vec![false; n])
}

/// Label of a visible node: type with numbering stripped from metanode
/// names, plus its attached data count.
pub fn node_label(pg: &ProcessedGraph, ix: NodeIx) -> String {
    let node = pg.tree.node(ix);
    let (ty, aux) = match &node.kind {
        NodeKind::Operation { op_type } => (op_type.clone(), pg.attachment(ix).map_or(0, |a| a.constants.len() + a.parameters.len())),
        NodeKind::Meta => {
            let mut aux = 0;
            let mut stack = vec![ix];
            while let Some(x) = stack.pop() {
                if pg.tree.node(x).kind.is_data() {
                    aux += 1;
                }
                stack.extend(pg.tree.children(x).iter().copied());
            }
            (strip_numbering(&node.segment).to_owned(), aux)
        }
        NodeKind::Constant => ("Constant".to_owned(), 0),
        NodeKind::Parameter => ("Parameter".to_owned(), 0),
    };
    format!("{ty}#{aux}")
}

/// One group member as a labelled graph: its nodes plus the group's shared
/// source and target, with edges lifted from the leaf graph.
pub fn member_graph(pg: &ProcessedGraph, frontier: &Frontier, group: &IsoGroup, member: &[NodeIx]) -> Labeled {
    let set: HashSet<NodeIx> = frontier.nodes().iter().copied().collect();
    let mut nodes: Vec<NodeIx> = member.to_vec();
    let mut labels: Vec<String> = member.iter().map(|&m| node_label(pg, m)).collect();
    if let Some(s) = group.source {
        nodes.push(s);
        labels.push("<source>".into());
    }
    if let Some(t) = group.target {
        nodes.push(t);
        labels.push("<target>".into());
    }
    let pos: HashMap<NodeIx, usize> = nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let mut edges = BTreeSet::new();
    for e in &pg.leaf_edges {
        let (Some(a), Some(b)) = (cover(pg, &set, e.src), cover(pg, &set, e.dst)) else {
            continue;
        };
        if a == b {
            continue;
        }
        if let (Some(&x), Some(&y)) = (pos.get(&a), pos.get(&b)) {
            edges.insert((x, y));
        }
    }
    Labeled { labels, edges }
}

/// Verifies every group of at most `max_nodes` nodes per member: members
/// disjoint and pairwise isomorphic. Returns the number of groups checked.
pub fn check_groups(pg: &ProcessedGraph, frontier: &Frontier, groups: &[IsoGroup], max_nodes: usize) -> Result<usize, String> {
    let mut owner: HashMap<NodeIx, usize> = HashMap::new();
    let mut checked = 0;
    for (gi, g) in groups.iter().enumerate() {
        for m in &g.members {
            for &n in m {
                if let Some(prev) = owner.insert(n, gi) {
                    if prev != gi || g.members.iter().filter(|mm| mm.contains(&n)).count() > 1 {
                        return Err(format!("{} in two members", pg.tree.id(n)));
                    }
                }
            }
        }
        if g.members[0].len() > max_nodes {
            continue;
        }
        let first = member_graph(pg, frontier, g, &g.members[0]);
        for m in &g.members[1..] {
            if !isomorphic(&first, &member_graph(pg, frontier, g, m)) {
                let names = |m: &[NodeIx]| m.iter().map(|&x| pg.tree.id(x).to_string()).collect::<Vec<_>>();
                return Err(format!("false merge: {:?} vs {:?}", names(&g.members[0]), names(m)));
            }
        }
        checked += 1;
    }
    Ok(checked)
}

/// Geometric and structural violations of a left-to-right layout.
pub fn layout_violations(vis: &VisibleGraph, l: &LayoutResult, params: &LayoutParams) -> Vec<String> {
    let mut bad = Vec::new();
    let pg = &*vis.graph;
    let st = vis.stacked();
    let containers = vis.frontier().containers();
    if l.boxes.len() != st.nodes.len() + containers.len() {
        bad.push(format!(
            "{} boxes for {} nodes and {} containers",
            l.boxes.len(),
            st.nodes.len(),
            containers.len()
        ));
    }
    let mut by_parent: BTreeMap<&str, Vec<(&String, &cgs_core::layout::Rect)>> = BTreeMap::new();
    for (p, b) in &l.boxes {
        if let Some(parent) = &b.parent {
            match l.boxes.get(parent) {
                Some(pb) if pb.rect.contains(&b.rect, params.margin) => {}
                Some(_) => bad.push(format!("{p} escapes {parent}")),
                None => bad.push(format!("{p} has no parent box {parent}")),
            }
            by_parent.entry(parent.as_str()).or_default().push((p, &b.rect));
        }
    }
    for (parent, kids) in &by_parent {
        for i in 0..kids.len() {
            for j in i + 1..kids.len() {
                if kids[i].1.overlaps(kids[j].1) {
                    bad.push(format!("{} overlaps {} in {parent}", kids[i].0, kids[j].0));
                }
            }
        }
    }
    for r in &l.routes {
        if r.points.len() < 2 {
            bad.push(format!("edge {} has a degenerate route", r.edge));
        }
        for w in r.points.windows(2) {
            if w[0].x != w[1].x && w[0].y != w[1].y {
                bad.push(format!("edge {} has a diagonal segment", r.edge));
            }
        }
        let e = &st.edges[r.edge];
        let ends = [(&e.src, r.points[0], true), (&e.dst, *r.points.last().unwrap(), false)];
        for (ep, at, out) in ends {
            let owner = &l.boxes[&pg.tree.id(ep.node()).to_string()].rect;
            let ok = match ep {
                Endpoint::Port(k) => l.ports.get(&cgs_core::prune::port_id(pg, k)).is_some_and(|p| p.at == at),
                Endpoint::Border(_) => {
                    let x = if out { owner.right() } else { owner.x };
                    at.x == x && at.y >= owner.y && at.y <= owner.bottom()
                }
            };
            if !ok {
                bad.push(format!("edge {} does not end on {}", r.edge, pg.tree.id(ep.node())));
            }
        }
    }
    let drawn = st
        .edges
        .iter()
        .filter(|e| !e.is_hidden() && !pg.tree.contains(e.src.node(), e.dst.node()) && !pg.tree.contains(e.dst.node(), e.src.node()))
        .count();
    if drawn != l.routes.len() {
        bad.push(format!("{} routes for {drawn} drawn edges", l.routes.len()));
    }
    let mut sides: BTreeMap<(&str, &str), Vec<(usize, f64)>> = BTreeMap::new();
    for (id, p) in &l.ports {
        let owner = &l.boxes[&p.owner].rect;
        let x = if p.side == "input" { owner.x } else { owner.right() };
        if p.at.x != x || p.at.y < owner.y || p.at.y > owner.bottom() {
            bad.push(format!("port {id} is off its {} border", p.side));
        }
        sides.entry((p.owner.as_str(), p.side)).or_default().push((p.level, p.at.y));
    }
    for ((owner, side), mut v) in sides {
        v.sort_by_key(|&(level, _)| level);
        if v.windows(2).any(|w| w[0].1 >= w[1].1) {
            bad.push(format!("{side} ports of {owner} not stacked by level"));
        }
    }
    for p in &l.pieces {
        let ok = if p.reversed { p.dummies == 0 } else { p.span >= 1 && p.dummies == p.span - 1 };
        if !ok {
            bad.push(format!("edge {} in {}: {} dummies over {} layers", p.edge, p.container, p.dummies, p.span));
        }
    }
    bad
}

/// Builds a processed graph or panics with the fixture name.
pub fn process(name: &str, raw: &RawGraph) -> ProcessedGraph {
    build_hierarchy(raw).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// A visible graph for an explicit frontier, bypassing the session.
pub fn visible(pg: &std::sync::Arc<ProcessedGraph>, frontier: Frontier, options: &SessionOptions) -> VisibleGraph {
    let derived = cgs_core::visible::derive(pg, frontier, options).expect("derive");
    VisibleGraph {
        graph: pg.clone(),
        derived,
        layer_class: None,
        cycle_report: None,
        options: *options,
        revision: 0,
    }
}

/// Options with the fixture's module threshold.
pub fn options_for(name: &str) -> SessionOptions {
    SessionOptions {
        module_threshold: threshold_for(name),
        ..SessionOptions::default()
    }
}

/// Checks a path query against the BFS oracle and against the graph
/// itself: the leaf path must be a real walk and every visible step must
/// be backed by visible edges.
pub fn check_path(pg: &ProcessedGraph, vis: &VisibleGraph, reach: &Reach, a: NodeIx, b: NodeIx, r: &cgs_core::visible::PathResult) -> Result<(), String> {
    let tree = &pg.tree;
    let expected = a == b || reach.nodes(pg, a, b);
    if r.reachable != expected {
        return Err(format!("{} -> {}: got {}, oracle {}", tree.id(a), tree.id(b), r.reachable, expected));
    }
    if !r.reachable {
        return if r.paths.is_empty() && r.leaf_path.is_empty() {
            Ok(())
        } else {
            Err("unreachable pair has paths".into())
        };
    }
    if r.paths.is_empty() {
        return Err("reachable pair without a visible path".into());
    }
    if a == b {
        return Ok(());
    }
    // the leaf path is a real walk from a source leaf to a target leaf
    let ix: Vec<NodeIx> = r.leaf_path.iter().map(|p| tree.get(p).unwrap()).collect();
    if !op_leaves(pg, a).contains(&ix[0]) || !op_leaves(pg, b).contains(ix.last().unwrap()) {
        return Err(format!("leaf path {:?} has wrong ends", r.leaf_path));
    }
    let edges: BTreeSet<(NodeIx, NodeIx)> = pg.leaf_edges.iter().map(|e| (e.src, e.dst)).collect();
    if ix.windows(2).any(|w| !edges.contains(&(w[0], w[1]))) {
        return Err(format!("leaf path {:?} skips an edge", r.leaf_path));
    }
    // every visible step is backed by visible edges leaving and entering
    // the right nodes
    let st = vis.stacked();
    for p in &r.paths {
        for s in &p.steps {
            let (from, to) = (tree.get(&s.from).unwrap(), tree.get(&s.to).unwrap());
            let first = s.edges.first().map(|&i| st.edges[i].src.node());
            let last = s.edges.last().map(|&i| st.edges[i].dst.node());
            if first != Some(from) || last != Some(to) {
                return Err(format!("step {} -> {} not backed by its edges", s.from, s.to));
            }
        }
    }
    Ok(())
}
