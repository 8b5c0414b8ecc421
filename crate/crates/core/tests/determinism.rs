use std::sync::Arc;

use cgs_core::layout::svg::render_svg;
use cgs_core::layout::{layout_graph, LayoutParams};
use cgs_core::visible::stats_csv;
use cgs_core::{build_hierarchy, emit_graph_file, parse_graph_file, Session, SessionOptions};
use cgs_testkit::{all_fixtures, threshold_for};

/// Every exported artefact for one graph, built from its file bytes.
fn export(bytes: &[u8], threshold: usize, cgm: bool) -> Vec<Vec<u8>> {
    let raw = parse_graph_file(bytes).unwrap();
    let pg = Arc::new(build_hierarchy(&raw).unwrap());
    let opts = SessionOptions {
        module_threshold: threshold,
        cgm,
        ..SessionOptions::default()
    };
    let mut s = Session::new(pg, opts).unwrap();
    let mut out = vec![s.stats_by_depth(4).map(|r| stats_csv(&r).into_bytes()).unwrap()];
    for depth in [1, 2, 3, 8] {
        s.expand_to_depth(depth);
        let vis = s.derive_visible().unwrap();
        let l = layout_graph(&vis, &LayoutParams::default()).unwrap();
        out.push(vis.to_json());
        out.push(l.to_json());
        out.push(render_svg(&l, 1.0).into_bytes());
    }
    out
}

#[test]
fn exports_are_byte_identical_across_runs() {
    for (name, raw) in all_fixtures() {
        let bytes = emit_graph_file(&raw);
        for cgm in [false, true] {
            let a = export(&bytes, threshold_for(&name), cgm);
            let b = export(&bytes, threshold_for(&name), cgm);
            assert_eq!(a.len(), b.len());
            for (i, (x, y)) in a.iter().zip(&b).enumerate() {
                assert!(x == y, "{name} cgm={cgm}: artefact {i} differs");
            }
        }
    }
}

#[test]
fn emitted_files_are_stable() {
    for (name, raw) in all_fixtures() {
        let once = emit_graph_file(&raw);
        let twice = emit_graph_file(&parse_graph_file(&once).unwrap());
        assert_eq!(once, twice, "{name}");
    }
}
