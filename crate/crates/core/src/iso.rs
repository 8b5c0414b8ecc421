//! Isomorphic sibling subgraph detection and stacking.
//!
//! Inside each expanded metanode we look for branches hanging off a shared
//! source node (and possibly rejoining at a shared target), or feeding a
//! shared target from nowhere. Branches are fingerprinted with sums of djb2
//! string hashes reduced mod [`P`]; equal fingerprints are confirmed by a
//! structural checksum and an explicit isomorphism before branches are
//! stacked into a pile.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::Serialize;

use crate::frontier::Frontier;
use crate::model::{NodeIx, NodeKind, ProcessedGraph};
use crate::prune::{Chain, Endpoint, Port, PortKey, PrunedEdges, VisibleEdge};

/// Fingerprint modulus.
pub const P: u64 = 10_000_019;

pub const DEFAULT_MIN_REPEAT: usize = 2;

/// Largest branch considered for stacking.
pub const MAX_MEMBER_NODES: usize = 32;

/// Search budget for the exact isomorphism check; running out counts as
/// "not isomorphic".
const ISO_STEP_BUDGET: usize = 200_000;

pub fn djb(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(5381u64, |h, &b| h.wrapping_mul(33).wrapping_add(u64::from(b)))
}

fn sum_mod(values: impl IntoIterator<Item = u64>) -> u64 {
    let total: u128 = values.into_iter().map(u128::from).sum();
    (total % u128::from(P)) as u64
}

/// Everything a node fingerprint depends on.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NodeSignature {
    pub ty: String,
    /// Types of neighbours inside the candidate or among its anchors.
    pub neighbor_types: Vec<String>,
    pub parent: String,
    pub indegree: usize,
    pub outdegree: usize,
    /// Attached constants and parameters.
    pub aux: usize,
}

impl NodeSignature {
    pub fn strings(&self) -> [String; 6] {
        let mut nbr = self.neighbor_types.clone();
        nbr.sort();
        [
            format!("t:{}", self.ty),
            format!("nbr:{}", nbr.join(",")),
            format!("p:{}", self.parent),
            format!("in:{}", self.indegree),
            format!("out:{}", self.outdegree),
            format!("aux:{}", self.aux),
        ]
    }
}

pub fn node_hash(sig: &NodeSignature) -> u64 {
    sum_mod(sig.strings().iter().map(|s| djb(s.as_bytes())))
}

pub fn edge_hash(src_type: &str, dst_type: &str) -> u64 {
    djb(format!("{src_type}→{dst_type}").as_bytes()) % P
}

pub fn subgraph_hash(node_hashes: &[u64], edge_hashes: &[u64]) -> u64 {
    sum_mod(node_hashes.iter().chain(edge_hashes).copied())
}

/// Basename with a leading `12_` / `12-` and a trailing `_3` / `-3` / `3`
/// removed, so numbered repeats of one block share a type.
pub fn strip_numbering(name: &str) -> &str {
    let b = name.as_bytes();
    let lead = b.iter().take_while(|c| c.is_ascii_digit()).count();
    let mut s = name;
    if lead > 0 && lead < b.len() && matches!(b[lead], b'_' | b'-') && lead + 1 < b.len() {
        s = &name[lead + 1..];
    }
    let trimmed = s.trim_end_matches(|c: char| c.is_ascii_digit());
    if trimmed.len() == s.len() || trimmed.is_empty() {
        return s;
    }
    let t = trimmed.strip_suffix(['_', '-']).unwrap_or(trimmed);
    if t.is_empty() {
        s
    } else {
        t
    }
}

/// Type string of a visible node as used by the fingerprints.
pub fn node_type(pg: &ProcessedGraph, ix: NodeIx) -> String {
    let node = pg.tree.node(ix);
    match &node.kind {
        NodeKind::Operation { op_type } => op_type.clone(),
        NodeKind::Constant => "Constant".to_owned(),
        NodeKind::Parameter => "Parameter".to_owned(),
        NodeKind::Meta => strip_numbering(&node.segment).to_owned(),
    }
}

/// Attached data nodes drawn on or inside `ix`.
pub fn aux_count(pg: &ProcessedGraph, ix: NodeIx) -> usize {
    if pg.tree.is_meta(ix) {
        pg.tree
            .subtree(ix)
            .filter(|&d| pg.tree.node(d).kind.is_data())
            .count()
    } else {
        pg.aux_count(ix)
    }
}

/// Children of one expanded metanode plus the outside nodes they connect
/// to, with leaf edges lifted to that level.
#[derive(Clone, Debug, Default)]
pub struct ScopeGraph {
    pub parent: NodeIx,
    /// Local index → tree node, children first (preorder), then outside
    /// anchors.
    pub nodes: Vec<NodeIx>,
    /// Collapsed children; only these can be pile members.
    pub eligible: Vec<bool>,
    pub succ: Vec<Vec<usize>>,
    pub pred: Vec<Vec<usize>>,
}

impl ScopeGraph {
    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.succ[a].binary_search(&b).is_ok()
    }
}

/// Scope graphs of every container in the frontier.
pub fn scope_graphs(pg: &ProcessedGraph, frontier: &Frontier) -> BTreeMap<NodeIx, ScopeGraph> {
    let tree = &pg.tree;
    let mut lifted: BTreeMap<NodeIx, BTreeSet<(NodeIx, NodeIx)>> = BTreeMap::new();
    for (u, v) in crate::prune::quotient_edges(pg, frontier) {
        let l = tree.lca(u, v);
        let mut cu = u;
        while let Some(p) = tree.parent(cu).filter(|&p| p != l) {
            lifted.entry(p).or_default().insert((cu, v));
            cu = p;
        }
        let mut cv = v;
        while let Some(p) = tree.parent(cv).filter(|&p| p != l) {
            lifted.entry(p).or_default().insert((u, cv));
            cv = p;
        }
        lifted.entry(l).or_default().insert((cu, cv));
    }
    let mut out = BTreeMap::new();
    for c in frontier.containers() {
        let edges = lifted.remove(&c).unwrap_or_default();
        let mut nodes: Vec<NodeIx> = tree
            .children(c)
            .iter()
            .copied()
            .filter(|&ch| frontier.is_expanded(ch) || frontier.is_frontier(ch))
            .collect();
        let inside = nodes.len();
        let outside: BTreeSet<NodeIx> = edges
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .filter(|&n| tree.parent(n) != Some(c))
            .collect();
        nodes.extend(outside);
        let local: HashMap<NodeIx, usize> = nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let eligible = (0..nodes.len())
            .map(|i| i < inside && !frontier.is_expanded(nodes[i]))
            .collect();
        let mut succ = vec![Vec::new(); nodes.len()];
        let mut pred = vec![Vec::new(); nodes.len()];
        for (a, b) in edges {
            let (la, lb) = (local[&a], local[&b]);
            succ[la].push(lb);
            pred[lb].push(la);
        }
        for l in succ.iter_mut().chain(pred.iter_mut()) {
            l.sort_unstable();
        }
        out.insert(
            c,
            ScopeGraph {
                parent: c,
                nodes,
                eligible,
                succ,
                pred,
            },
        );
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Category {
    /// Shared source and shared target.
    #[serde(rename = "same-source-and-target")]
    SourceAndTarget,
    /// Shared source, no target.
    #[serde(rename = "same-source-no-target")]
    SourceOnly,
    /// Shared target, no source.
    #[serde(rename = "same-target-no-source")]
    TargetOnly,
}

impl Category {
    pub fn number(self) -> u8 {
        match self {
            Category::SourceAndTarget => 1,
            Category::SourceOnly => 2,
            Category::TargetOnly => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Checksum {
    pub nodes: usize,
    pub edges: usize,
    /// (type, aux, indegree, outdegree) per node, sorted.
    pub node_profile: Vec<(String, usize, usize, usize)>,
    /// (source type, target type) per edge, sorted.
    pub edge_profile: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsoGroup {
    pub parent: NodeIx,
    pub category: Category,
    pub source: Option<NodeIx>,
    pub target: Option<NodeIx>,
    pub fingerprint: u64,
    /// Member node sets in pile order; the first is the representative.
    /// `members[m][i]` corresponds to `members[0][i]`.
    pub members: Vec<Vec<NodeIx>>,
}

impl IsoGroup {
    pub fn repeat(&self) -> usize {
        self.members.len()
    }
}

/// A branch candidate in scope-local indices.
struct Candidate {
    nodes: Vec<usize>,
    anchors: Vec<usize>,
}

struct Scope<'a> {
    pg: &'a ProcessedGraph,
    g: &'a ScopeGraph,
    types: Vec<String>,
    aux: Vec<usize>,
}

impl<'a> Scope<'a> {
    fn new(pg: &'a ProcessedGraph, g: &'a ScopeGraph) -> Self {
        let types = g.nodes.iter().map(|&n| node_type(pg, n)).collect();
        let aux = g.nodes.iter().map(|&n| aux_count(pg, n)).collect();
        Scope { pg, g, types, aux }
    }

    fn in_view(&self, c: &Candidate, x: usize) -> bool {
        c.nodes.binary_search(&x).is_ok() || c.anchors.contains(&x)
    }

    /// Edges among candidate nodes and between candidate nodes and anchors.
    fn edges(&self, c: &Candidate) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for &a in c.nodes.iter().chain(&c.anchors) {
            for &b in &self.g.succ[a] {
                let a_in = c.nodes.binary_search(&a).is_ok();
                let b_in = c.nodes.binary_search(&b).is_ok();
                if (a_in || b_in) && self.in_view(c, b) {
                    out.push((a, b));
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    fn degrees(&self, c: &Candidate, edges: &[(usize, usize)]) -> HashMap<usize, (usize, usize)> {
        let mut deg: HashMap<usize, (usize, usize)> = HashMap::new();
        for &(a, b) in edges {
            deg.entry(a).or_default().1 += 1;
            deg.entry(b).or_default().0 += 1;
        }
        for &n in &c.nodes {
            deg.entry(n).or_default();
        }
        deg
    }

    fn signature(&self, c: &Candidate, n: usize, deg: &HashMap<usize, (usize, usize)>) -> NodeSignature {
        let neighbor_types = self.g.succ[n]
            .iter()
            .chain(&self.g.pred[n])
            .filter(|&&x| self.in_view(c, x))
            .map(|&x| self.types[x].clone())
            .collect();
        let (indegree, outdegree) = deg[&n];
        NodeSignature {
            ty: self.types[n].clone(),
            neighbor_types,
            parent: self.pg.tree.id(self.g.parent).to_string(),
            indegree,
            outdegree,
            aux: self.aux[n],
        }
    }

    fn fingerprint(&self, c: &Candidate) -> (u64, Checksum) {
        let edges = self.edges(c);
        let deg = self.degrees(c, &edges);
        let nh: Vec<u64> = c.nodes.iter().map(|&n| node_hash(&self.signature(c, n, &deg))).collect();
        let eh: Vec<u64> = edges
            .iter()
            .map(|&(a, b)| edge_hash(&self.types[a], &self.types[b]))
            .collect();
        let mut node_profile: Vec<_> = c
            .nodes
            .iter()
            .map(|&n| (self.types[n].clone(), self.aux[n], deg[&n].0, deg[&n].1))
            .collect();
        node_profile.sort();
        let mut edge_profile: Vec<_> = edges
            .iter()
            .map(|&(a, b)| (self.types[a].clone(), self.types[b].clone()))
            .collect();
        edge_profile.sort();
        let checksum = Checksum {
            nodes: c.nodes.len(),
            edges: edges.len(),
            node_profile,
            edge_profile,
        };
        (subgraph_hash(&nh, &eh), checksum)
    }

    /// Grows a forward branch from `s` through `x`. Returns the branch and
    /// its exits.
    fn grow_forward(&self, s: usize, x: usize, taken: &[bool]) -> Option<(Vec<usize>, Vec<usize>)> {
        self.grow(s, x, taken, &self.g.succ, &self.g.pred)
    }

    fn grow_backward(&self, t: usize, x: usize, taken: &[bool]) -> Option<(Vec<usize>, Vec<usize>)> {
        self.grow(t, x, taken, &self.g.pred, &self.g.succ)
    }

    fn grow(
        &self,
        anchor: usize,
        x: usize,
        taken: &[bool],
        fwd: &[Vec<usize>],
        back: &[Vec<usize>],
    ) -> Option<(Vec<usize>, Vec<usize>)> {
        if !self.g.eligible[x] || taken[x] || back[x] != [anchor] {
            return None;
        }
        let mut inside: BTreeSet<usize> = BTreeSet::from([x]);
        let mut frontier = vec![x];
        while let Some(n) = frontier.pop() {
            for &y in &fwd[n] {
                if inside.contains(&y) || y == anchor || !self.g.eligible[y] || taken[y] {
                    continue;
                }
                if back[y].iter().all(|p| inside.contains(p)) {
                    inside.insert(y);
                    if inside.len() > MAX_MEMBER_NODES {
                        return None;
                    }
                    frontier.push(y);
                }
            }
        }
        let exits: BTreeSet<usize> = inside
            .iter()
            .flat_map(|&n| fwd[n].iter().copied())
            .filter(|y| !inside.contains(y))
            .collect();
        Some((inside.into_iter().collect(), exits.into_iter().collect()))
    }

    /// Explicit isomorphism from `c` onto `rep` fixing the anchors. Returns
    /// `mapping[i]` = node of `c` matching `rep.nodes[i]`.
    fn isomorphism(&self, rep: &Candidate, c: &Candidate) -> Option<Vec<usize>> {
        let n = rep.nodes.len();
        if c.nodes.len() != n {
            return None;
        }
        let re = self.edges(rep);
        let ce = self.edges(c);
        if re.len() != ce.len() {
            return None;
        }
        let rdeg = self.degrees(rep, &re);
        let cdeg = self.degrees(c, &ce);
        let re_set: HashSet<(usize, usize)> = re.iter().copied().collect();
        let ce_set: HashSet<(usize, usize)> = ce.iter().copied().collect();
        let label = |cand: &Candidate, deg: &HashMap<usize, (usize, usize)>, set: &HashSet<(usize, usize)>, x: usize| {
            let anchor_links: Vec<(bool, bool)> = cand
                .anchors
                .iter()
                .map(|&a| (set.contains(&(a, x)), set.contains(&(x, a))))
                .collect();
            (self.types[x].clone(), self.aux[x], deg[&x], anchor_links)
        };
        let rl: Vec<_> = rep.nodes.iter().map(|&x| label(rep, &rdeg, &re_set, x)).collect();
        let cl: Vec<_> = c.nodes.iter().map(|&x| label(c, &cdeg, &ce_set, x)).collect();
        let mut mapping = vec![usize::MAX; n];
        let mut used = vec![false; n];
        let mut steps = 0usize;
        #[allow(clippy::too_many_arguments)]
        fn search<T: PartialEq>(
            i: usize,
            rep: &Candidate,
            c: &Candidate,
            rl: &[T],
            cl: &[T],
            re: &HashSet<(usize, usize)>,
            ce: &HashSet<(usize, usize)>,
            mapping: &mut [usize],
            used: &mut [bool],
            steps: &mut usize,
        ) -> bool {
            if i == rep.nodes.len() {
                return true;
            }
            for j in 0..c.nodes.len() {
                *steps += 1;
                if *steps > ISO_STEP_BUDGET {
                    return false;
                }
                if used[j] || rl[i] != cl[j] {
                    continue;
                }
                let consistent = (0..i).all(|k| {
                    let (rk, ck) = (rep.nodes[k], c.nodes[mapping[k]]);
                    let (ri, cj) = (rep.nodes[i], c.nodes[j]);
                    re.contains(&(rk, ri)) == ce.contains(&(ck, cj))
                        && re.contains(&(ri, rk)) == ce.contains(&(cj, ck))
                });
                if !consistent {
                    continue;
                }
                mapping[i] = j;
                used[j] = true;
                if search(i + 1, rep, c, rl, cl, re, ce, mapping, used, steps) {
                    return true;
                }
                used[j] = false;
            }
            mapping[i] = usize::MAX;
            false
        }
        search(0, rep, c, &rl, &cl, &re_set, &ce_set, &mut mapping, &mut used, &mut steps)
            .then(|| mapping.into_iter().map(|j| c.nodes[j]).collect())
    }

    fn min_path(&self, c: &Candidate) -> String {
        c.nodes
            .iter()
            .map(|&n| self.pg.tree.id(self.g.nodes[n]).as_str())
            .min()
            .unwrap_or_default()
            .to_owned()
    }

    /// Clusters same-anchored candidates into groups of isomorphic members.
    fn cluster(
        &self,
        category: Category,
        candidates: Vec<Candidate>,
        taken: &mut [bool],
        out: &mut Vec<IsoGroup>,
    ) {
        let mut buckets: BTreeMap<(u64, Checksum), Vec<Candidate>> = BTreeMap::new();
        for c in candidates {
            let key = self.fingerprint(&c);
            buckets.entry(key).or_default().push(c);
        }
        for ((fingerprint, _), mut cands) in buckets {
            if cands.len() < 2 {
                continue;
            }
            cands.sort_by_cached_key(|c| self.min_path(c));
            let mut clusters: Vec<(Candidate, Vec<Vec<usize>>)> = Vec::new();
            for c in cands {
                if c.nodes.iter().any(|&n| taken[n]) {
                    continue;
                }
                let mut placed = false;
                for (rep, members) in clusters.iter_mut() {
                    if let Some(m) = self.isomorphism(rep, &c) {
                        members.push(m);
                        placed = true;
                        break;
                    }
                }
                if !placed {
                    let first = c.nodes.clone();
                    clusters.push((c, vec![first]));
                }
            }
            for (rep, members) in clusters {
                if members.len() < 2 {
                    continue;
                }
                for m in &members {
                    for &n in m {
                        taken[n] = true;
                    }
                }
                let g = self.g;
                let anchor = |i: usize| rep.anchors.get(i).map(|&a| g.nodes[a]);
                let (source, target) = match category {
                    Category::SourceAndTarget => (anchor(0), anchor(1)),
                    Category::SourceOnly => (anchor(0), None),
                    Category::TargetOnly => (None, anchor(0)),
                };
                out.push(IsoGroup {
                    parent: g.parent,
                    category,
                    source,
                    target,
                    fingerprint,
                    members: members
                        .into_iter()
                        .map(|m| m.into_iter().map(|n| g.nodes[n]).collect())
                        .collect(),
                });
            }
        }
    }
}

/// Groups of isomorphic branches inside one scope.
pub fn detect_in_scope(pg: &ProcessedGraph, g: &ScopeGraph) -> Vec<IsoGroup> {
    let scope = Scope::new(pg, g);
    let n = g.nodes.len();
    let mut taken = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        let mut by_target: BTreeMap<Option<usize>, Vec<Candidate>> = BTreeMap::new();
        for &x in &g.succ[s] {
            let Some((nodes, exits)) = scope.grow_forward(s, x, &taken) else {
                continue;
            };
            match exits.as_slice() {
                [] => by_target.entry(None).or_default().push(Candidate {
                    nodes,
                    anchors: vec![s],
                }),
                [t] => by_target.entry(Some(*t)).or_default().push(Candidate {
                    nodes,
                    anchors: vec![s, *t],
                }),
                _ => {}
            }
        }
        for (target, cands) in by_target {
            let cat = if target.is_some() {
                Category::SourceAndTarget
            } else {
                Category::SourceOnly
            };
            scope.cluster(cat, cands, &mut taken, &mut out);
        }
    }
    for t in 0..n {
        let mut cands = Vec::new();
        for &x in &g.pred[t] {
            let Some((nodes, entries)) = scope.grow_backward(t, x, &taken) else {
                continue;
            };
            if entries.is_empty() {
                cands.push(Candidate {
                    nodes,
                    anchors: vec![t],
                });
            }
        }
        scope.cluster(Category::TargetOnly, cands, &mut taken, &mut out);
    }
    out
}

/// Groups across every expanded container, parents in preorder.
pub fn detect_iso_groups(pg: &ProcessedGraph, frontier: &Frontier) -> Vec<IsoGroup> {
    scope_graphs(pg, frontier)
        .values()
        .flat_map(|g| detect_in_scope(pg, g))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pile {
    /// Path of the representative's first node; stable across revisions.
    pub id: String,
    pub category: Category,
    pub members: Vec<Vec<NodeIx>>,
}

impl Pile {
    pub fn repeat(&self) -> usize {
        self.members.len()
    }

    pub fn representative(&self) -> &[NodeIx] {
        &self.members[0]
    }
}

#[derive(Clone, Debug, Default)]
pub struct Stacked {
    /// Visible nodes after stacking, preorder.
    pub nodes: Vec<NodeIx>,
    pub edges: Vec<VisibleEdge>,
    pub ports: BTreeMap<PortKey, Port>,
    /// Leaf-edge chains over the stacked edges.
    pub chains: Vec<Chain>,
    pub piles: Vec<Pile>,
    /// Stacked-away node → the representative node drawn for it.
    pub folded: BTreeMap<NodeIx, NodeIx>,
    /// Representative node → index into `piles`.
    pub pile_of: BTreeMap<NodeIx, usize>,
}

/// Replaces every group with at least `min_repeat` members by its
/// representative and re-anchors edges and ports onto it.
pub fn stack(
    pg: &ProcessedGraph,
    nodes: &[NodeIx],
    pruned: &PrunedEdges,
    groups: &[IsoGroup],
    min_repeat: usize,
) -> Stacked {
    let mut folded: BTreeMap<NodeIx, NodeIx> = BTreeMap::new();
    let mut piles = Vec::new();
    let mut pile_of = BTreeMap::new();
    for g in groups.iter().filter(|g| g.repeat() >= min_repeat.max(2)) {
        let rep = &g.members[0];
        for m in &g.members[1..] {
            for (i, &n) in m.iter().enumerate() {
                folded.insert(n, rep[i]);
            }
        }
        let pile_ix = piles.len();
        for &n in rep {
            pile_of.insert(n, pile_ix);
        }
        piles.push(Pile {
            id: pg.tree.id(rep[0]).to_string(),
            category: g.category,
            members: g.members.clone(),
        });
    }
    let map_node = |n: NodeIx| folded.get(&n).copied().unwrap_or(n);
    let map_end = |e: Endpoint| match e {
        Endpoint::Border(n) => Endpoint::Border(map_node(n)),
        Endpoint::Port(k) => Endpoint::Port(PortKey {
            owner: map_node(k.owner),
            ..k
        }),
    };
    let mut edges: Vec<VisibleEdge> = Vec::new();
    let mut index: HashMap<(crate::prune::EdgeKind, Endpoint, Endpoint), usize> = HashMap::new();
    let mut remap = Vec::with_capacity(pruned.edges.len());
    for e in &pruned.edges {
        let (src, dst) = (map_end(e.src), map_end(e.dst));
        let id = *index.entry((e.kind, src, dst)).or_insert_with(|| {
            edges.push(VisibleEdge {
                kind: e.kind,
                src,
                dst,
                contributors: Vec::new(),
            });
            edges.len() - 1
        });
        edges[id].contributors.extend_from_slice(&e.contributors);
        remap.push(id);
    }
    for e in &mut edges {
        e.contributors.sort_unstable();
    }
    let chains = pruned
        .chains
        .iter()
        .map(|c| match *c {
            Chain::Internal => Chain::Internal,
            Chain::Routed {
                src_hidden,
                trunk,
                dst_hidden,
            } => Chain::Routed {
                src_hidden: src_hidden.map(|i| remap[i]),
                trunk: remap[trunk],
                dst_hidden: dst_hidden.map(|i| remap[i]),
            },
        })
        .collect();
    let mut ports: BTreeMap<PortKey, Port> = BTreeMap::new();
    for p in pruned.ports.values() {
        let key = PortKey {
            owner: map_node(p.key.owner),
            ..p.key
        };
        ports.entry(key).or_insert_with(|| Port {
            key,
            kind: p.kind,
            hidden: Vec::new(),
        });
    }
    for (i, e) in edges.iter().enumerate() {
        if e.is_hidden() {
            for end in [e.src, e.dst] {
                if let Some(k) = end.port() {
                    ports.get_mut(&k).expect("port of hidden edge").hidden.push(i);
                }
            }
        }
    }
    let nodes = nodes.iter().copied().filter(|n| !folded.contains_key(n)).collect();
    Stacked {
        nodes,
        edges,
        ports,
        chains,
        piles,
        folded,
        pile_of,
    }
}
