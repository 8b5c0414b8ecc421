//! Frontiers: the antichain of tree nodes visible under an expansion state.

use crate::error::ModelError;
use crate::model::{NodeIx, ProcessedGraph};

const NONE: usize = usize::MAX;

/// Visible nodes of a hierarchy for one expansion state. Expanded metanodes
/// (the root included) are containers; their non-expanded children are
/// frontier nodes. Attached data nodes are drawn on their operation and are
/// never frontier nodes themselves.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frontier {
    expanded: Vec<bool>,
    nodes: Vec<NodeIx>,
    rep: Vec<usize>,
}

impl Frontier {
    /// Frontier for the given expanded metanodes. Entries whose ancestors are
    /// not all expanded have no effect.
    pub fn from_expanded(pg: &ProcessedGraph, expanded: impl IntoIterator<Item = NodeIx>) -> Self {
        let tree = &pg.tree;
        let mut flag = vec![false; tree.len()];
        for ix in expanded {
            if tree.is_meta(ix) {
                flag[ix] = true;
            }
        }
        flag[0] = true;
        let mut expanded = vec![false; tree.len()];
        let mut nodes = Vec::new();
        let mut rep = vec![NONE; tree.len()];
        // Preorder storage lets one forward pass resolve representatives.
        for ix in 0..tree.len() {
            let parent_open = match tree.parent(ix) {
                None => true,
                Some(p) => expanded[p],
            };
            if !parent_open {
                let p = tree.parent(ix).unwrap();
                rep[ix] = rep[p];
                continue;
            }
            if tree.is_meta(ix) && flag[ix] {
                expanded[ix] = true;
                continue;
            }
            rep[ix] = ix;
            if !pg.is_attached(ix) {
                nodes.push(ix);
            }
        }
        let mut f = Frontier {
            expanded,
            nodes,
            rep,
        };
        f.resolve_attached(pg);
        f
    }

    /// Nothing expanded: the root's children.
    pub fn top_level(pg: &ProcessedGraph) -> Self {
        Self::from_expanded(pg, std::iter::empty())
    }

    /// Everything expanded: the leaves.
    pub fn full(pg: &ProcessedGraph) -> Self {
        Self::from_expanded(pg, pg.tree.metanodes())
    }

    /// All metanodes shallower than `depth` expanded (depth 1 = top level).
    pub fn to_depth(pg: &ProcessedGraph, depth: usize) -> Self {
        let tree = &pg.tree;
        Self::from_expanded(
            pg,
            tree.metanodes().filter(|&m| tree.depth(m) < depth),
        )
    }

    /// Frontier from an explicit antichain, which must cover every
    /// operation leaf.
    pub fn from_nodes(pg: &ProcessedGraph, nodes: &[NodeIx]) -> Result<Self, ModelError> {
        let tree = &pg.tree;
        let mut sorted: Vec<NodeIx> = nodes.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        for w in sorted.windows(2) {
            if tree.contains(w[0], w[1]) {
                return Err(ModelError::InvalidFrontier(format!(
                    "{} contains {}",
                    tree.id(w[0]),
                    tree.id(w[1])
                )));
            }
        }
        if sorted.first() == Some(&0) {
            return Err(ModelError::InvalidFrontier("root cannot be a frontier node".into()));
        }
        let mut expanded = Vec::new();
        for &n in &sorted {
            expanded.extend(tree.ancestors(n));
        }
        let f = Self::from_expanded(pg, expanded);
        for op in pg.operations() {
            let r = f.rep(op);
            if r.is_none_or(|r| sorted.binary_search(&r).is_err()) {
                return Err(ModelError::InvalidFrontier(format!(
                    "leaf {} is not covered",
                    tree.id(op)
                )));
            }
        }
        Ok(f)
    }

    fn resolve_attached(&mut self, pg: &ProcessedGraph) {
        for (&data, &owner) in &pg.data_owner {
            if self.rep[data] == data {
                self.rep[data] = self.rep[owner];
            }
        }
    }

    /// Frontier nodes in tree preorder.
    pub fn nodes(&self) -> &[NodeIx] {
        &self.nodes
    }

    pub fn is_expanded(&self, ix: NodeIx) -> bool {
        self.expanded[ix]
    }

    /// Expanded metanodes, root first, in preorder.
    pub fn containers(&self) -> Vec<NodeIx> {
        (0..self.expanded.len()).filter(|&i| self.expanded[i]).collect()
    }

    /// The frontier node standing for `ix` (itself, or its collapsed
    /// ancestor). `None` for containers.
    pub fn rep(&self, ix: NodeIx) -> Option<NodeIx> {
        match self.rep[ix] {
            NONE => None,
            r => Some(r),
        }
    }

    pub fn is_frontier(&self, ix: NodeIx) -> bool {
        self.rep[ix] == ix && !self.expanded[ix]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_hierarchy, NodeKind, RawGraph};

    fn graph() -> ProcessedGraph {
        let mut raw = RawGraph::new("t");
        raw.op("A/B/x", "X")
            .op("A/B/y", "X")
            .op("A/z", "X")
            .op("C/w", "X")
            .add("C/p", NodeKind::Parameter)
            .link("C/p", "C/w");
        build_hierarchy(&raw).unwrap()
    }

    #[test]
    fn top_level_and_full() {
        let pg = graph();
        let t = &pg.tree;
        let top = Frontier::top_level(&pg);
        let ids: Vec<&str> = top.nodes().iter().map(|&i| t.id(i).as_str()).collect();
        assert_eq!(ids, ["A", "C"]);
        assert_eq!(top.rep(t.get("A/B/x").unwrap()), t.get("A"));
        let full = Frontier::full(&pg);
        let ids: Vec<&str> = full.nodes().iter().map(|&i| t.id(i).as_str()).collect();
        assert_eq!(ids, ["A/B/x", "A/B/y", "A/z", "C/w"]);
        // attached data resolve to their operation
        assert_eq!(full.rep(t.get("C/p").unwrap()), t.get("C/w"));
    }

    #[test]
    fn explicit_antichain() {
        let pg = graph();
        let t = &pg.tree;
        let ok = Frontier::from_nodes(
            &pg,
            &[t.get("A/B").unwrap(), t.get("A/z").unwrap(), t.get("C").unwrap()],
        )
        .unwrap();
        assert!(ok.is_expanded(t.get("A").unwrap()));
        assert!(Frontier::from_nodes(&pg, &[t.get("A").unwrap(), t.get("A/z").unwrap()]).is_err());
        assert!(Frontier::from_nodes(&pg, &[t.get("A").unwrap()]).is_err());
    }

    #[test]
    fn unclosed_expansions_are_ignored() {
        let pg = graph();
        let t = &pg.tree;
        let f = Frontier::from_expanded(&pg, [t.get("A/B").unwrap()]);
        assert_eq!(f, Frontier::top_level(&pg));
    }
}
