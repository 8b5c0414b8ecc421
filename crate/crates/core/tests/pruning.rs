use std::collections::BTreeSet;
use std::sync::Arc;

use cgs_core::prune::{port_id, recognize_modules, EdgeKind, PortKind, Side};
use cgs_core::{Frontier, SessionOptions};
use cgs_testkit::{
    all_fixtures, check_conservation, check_lifted_reachability, frontiers, load, options_for, process,
    random_hierarchical_dag, visible, Reach,
};
use proptest::prelude::*;

#[test]
fn every_leaf_edge_is_accounted_for() {
    for (name, raw) in all_fixtures() {
        let pg = Arc::new(process(&name, &raw));
        for threshold in [1, 3, options_for(&name).module_threshold, 1000] {
            let opts = SessionOptions {
                module_threshold: threshold,
                ..SessionOptions::default()
            };
            for f in frontiers(&pg) {
                let vis = visible(&pg, f, &opts);
                let st = vis.stacked();
                check_conservation(&pg, &st.edges, &st.chains, |x| vis.visible_rep(x).unwrap())
                    .unwrap_or_else(|e| panic!("{name} t={threshold}: {e}"));
            }
        }
    }
}

#[test]
fn reachability_survives_the_lift() {
    for (name, raw) in all_fixtures() {
        let pg = Arc::new(process(&name, &raw));
        let reach = Reach::new(&pg);
        for f in frontiers(&pg) {
            let vis = visible(&pg, f, &options_for(&name));
            check_lifted_reachability(&vis, &reach).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }
}

fn port_design() -> Arc<cgs_core::ProcessedGraph> {
    Arc::new(process("port_design", &load("port_design")))
}

/// Main and network_train open, everything else collapsed: softmax is
/// visible and its consumers sit inside collapsed modules.
fn softmax_view(pg: &Arc<cgs_core::ProcessedGraph>) -> cgs_core::VisibleGraph {
    let tree = &pg.tree;
    let f = Frontier::from_expanded(pg, [tree.get("Main").unwrap(), tree.get("Main/network_train").unwrap()]);
    visible(pg, f, &options_for("port_design"))
}

#[test]
fn module_levels_follow_depth() {
    let pg = port_design();
    let tree = &pg.tree;
    let levels: BTreeSet<(String, usize)> = recognize_modules(&pg, 4)
        .level
        .iter()
        .map(|(&m, &l)| (tree.id(m).to_string(), l))
        .collect();
    let want: BTreeSet<(String, usize)> = [
        ("Main", 1),
        ("Gradients", 1),
        ("Main/network_train", 2),
        ("Main/loss_net", 2),
    ]
    .into_iter()
    .map(|(p, l)| (p.to_string(), l))
    .collect();
    assert_eq!(levels, want);
}

#[test]
fn softmax_has_a_level_one_and_a_level_two_output_port() {
    let pg = port_design();
    let vis = softmax_view(&pg);
    let st = vis.stacked();
    let tree = &pg.tree;
    let softmax = tree.get("Main/network_train/softmax").unwrap();
    let mut own: Vec<(Side, usize)> = st
        .ports
        .keys()
        .filter(|k| k.owner == softmax)
        .map(|k| (k.side, k.level))
        .collect();
    own.sort();
    assert_eq!(own, vec![(Side::Output, 1), (Side::Output, 2)]);
    for k in st.ports.keys().filter(|k| k.owner == softmax) {
        assert_eq!(st.ports[k].kind, PortKind::NonmodulePort);
    }

    let le = |a: &str, b: &str| {
        let (a, b) = (tree.get(a).unwrap(), tree.get(b).unwrap());
        pg.leaf_edges.iter().position(|e| e.src == a && e.dst == b).unwrap()
    };
    // into Gradients: hidden tail to Main's level-1 port, then a module edge
    let c = st.chains[le("Main/network_train/softmax", "Gradients/grad_softmax")].edges();
    let kinds: Vec<EdgeKind> = c.iter().map(|&i| st.edges[i].kind).collect();
    assert_eq!(kinds, vec![EdgeKind::HiddenEdge, EdgeKind::ModuleEdge]);
    let trunk = &st.edges[c[1]];
    assert_eq!(trunk.src.port().map(|k| (tree.id(k.owner).as_str().to_owned(), k.level)), Some(("Main".into(), 1)));
    assert_eq!(trunk.dst.node(), tree.get("Gradients").unwrap());
    // into loss_net: through network_train's level-2 port
    let c = st.chains[le("Main/network_train/softmax", "Main/loss_net/xent")].edges();
    let trunk = &st.edges[*c.last().unwrap()];
    assert_eq!(trunk.kind, EdgeKind::ModuleEdge);
    assert_eq!(
        trunk.src.port().map(|k| (tree.id(k.owner).as_str().to_owned(), k.level)),
        Some(("Main/network_train".into(), 2))
    );
    assert_eq!(trunk.dst.node(), tree.get("Main/loss_net").unwrap());

    // module ports sit at their owner's depth; nonmodule ports take the
    // level of the module they lead out of
    for k in st.ports.keys() {
        if st.ports[k].kind == PortKind::ModulePort {
            assert_eq!(k.level, tree.depth(k.owner), "{}", port_id(&pg, k));
        }
    }
}

#[test]
fn level_two_port_hides_only_the_sibling_module_edge() {
    let pg = port_design();
    let vis = softmax_view(&pg);
    let st = vis.stacked();
    let tree = &pg.tree;
    let softmax = tree.get("Main/network_train/softmax").unwrap();
    let key = st.ports.keys().find(|k| k.owner == softmax && k.level == 2).unwrap();
    let ids = vis.reveal_hidden(&port_id(&pg, key)).unwrap();
    assert_eq!(ids.len(), 1);
    let hidden = &st.edges[ids[0]];
    assert!(hidden.is_hidden());
    let targets: Vec<String> = hidden
        .contributors
        .iter()
        .map(|&c| tree.id(pg.leaf_edges[c].dst).to_string())
        .collect();
    assert_eq!(targets, vec!["Main/loss_net/xent"]);
}

#[test]
fn hidden_edges_are_revealed_by_port() {
    let pg = port_design();
    let vis = softmax_view(&pg);
    let st = vis.stacked();
    let mut revealed = BTreeSet::new();
    for (k, p) in &st.ports {
        let ids = vis.reveal_hidden(&port_id(&pg, k)).unwrap();
        assert_eq!(ids, p.hidden);
        for &i in &ids {
            assert!(st.edges[i].is_hidden());
            revealed.insert(i);
        }
    }
    let hidden: BTreeSet<usize> = (0..st.edges.len()).filter(|&i| st.edges[i].is_hidden()).collect();
    assert!(!hidden.is_empty());
    assert_eq!(revealed, hidden);
    assert!(vis.reveal_hidden("no-such-port").is_err());
}

#[test]
fn collapsed_modules_merge_parallel_edges() {
    let pg = port_design();
    let vis = visible(&pg, Frontier::top_level(&pg), &options_for("port_design"));
    let st = vis.stacked();
    let tree = &pg.tree;
    let (main, grads) = (tree.get("Main").unwrap(), tree.get("Gradients").unwrap());
    let brute: Vec<usize> = (0..pg.leaf_edges.len())
        .filter(|&i| {
            let e = pg.leaf_edges[i];
            tree.contains(main, e.src) && tree.contains(grads, e.dst)
        })
        .collect();
    let between: Vec<&cgs_core::prune::VisibleEdge> = st
        .edges
        .iter()
        .filter(|e| e.src.node() == main && e.dst.node() == grads)
        .collect();
    assert_eq!(between.len(), 1);
    assert_eq!(between[0].kind, EdgeKind::ModuleEdge);
    assert_eq!(between[0].contributors, brute);
    assert!(st.edges.iter().all(|e| !e.is_hidden()));
}

#[test]
fn infinite_threshold_gives_plain_edges() {
    for (name, raw) in all_fixtures() {
        let pg = Arc::new(process(&name, &raw));
        let opts = SessionOptions {
            module_threshold: usize::MAX,
            ..SessionOptions::default()
        };
        let vis = visible(&pg, Frontier::full(&pg), &opts);
        assert!(vis.stacked().ports.is_empty(), "{name}");
        assert!(vis.stacked().edges.iter().all(|e| e.kind == EdgeKind::NormalEdge), "{name}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_graphs_conserve_edges(seed in any::<u64>(), threshold in 1usize..12, pick in any::<prop::sample::Index>()) {
        let raw = random_hierarchical_dag(seed, 40);
        let pg = Arc::new(process("random", &raw));
        let fs = frontiers(&pg);
        let f = fs[pick.index(fs.len())].clone();
        let opts = SessionOptions { module_threshold: threshold, ..SessionOptions::default() };
        let vis = visible(&pg, f, &opts);
        let st = vis.stacked();
        let r = check_conservation(&pg, &st.edges, &st.chains, |x| vis.visible_rep(x).unwrap());
        prop_assert!(r.is_ok(), "{:?}", r);
        let r = check_lifted_reachability(&vis, &Reach::new(&pg));
        prop_assert!(r.is_ok(), "{:?}", r);
    }
}
