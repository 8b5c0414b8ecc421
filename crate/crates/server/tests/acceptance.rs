//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit when
//! any criterion fails.

use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use cgs_core::concept::build_concept_graph;
use cgs_core::iso::detect_iso_groups;
use cgs_core::layout::{layout_graph, stable_relayout, LayoutParams};
use cgs_core::synth::{resnet_like, resnet_like_stages, scale_graph};
use cgs_core::visible::find_path;
use cgs_core::{build_hierarchy, emit_graph_file, parse_graph_file, Frontier, NodeIx, SessionOptions};
use cgs_testkit::{
    all_fixtures, check_conservation, check_groups, check_lifted_reachability, check_path, frontiers, layout_violations,
    leaf_graph_acyclic, load, options_for, process, random_hierarchical_dag, threshold_for, top_level_acyclic, visible,
    Reach,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn cycle_removal() -> Outcome {
    const GRAPHS: u64 = 500;
    let fixture = process("cycle", &load("cycle"));
    let cg = build_concept_graph(&fixture);
    if !top_level_acyclic(&cg.graph) || cg.report.splits.is_empty() {
        return outcome(false, "cycle fixture not resolved");
    }
    let (mut acyclic, mut max_passes, mut slowest, mut silent, mut slow) = (0, 0, Duration::ZERO, 0, 0);
    for seed in 0..GRAPHS {
        let pg = process("random", &random_hierarchical_dag(seed, 200));
        if !leaf_graph_acyclic(&pg) {
            return outcome(false, format!("seed {seed}: leaf graph is not a DAG"));
        }
        let t = Instant::now();
        let cg = build_concept_graph(&pg);
        let took = t.elapsed();
        slowest = slowest.max(took);
        if took >= Duration::from_millis(50) {
            slow += 1;
        }
        let ok = top_level_acyclic(&cg.graph);
        max_passes = max_passes.max(cg.report.passes);
        if ok && cg.report.passes <= 2 {
            acyclic += 1;
        }
        // cycles left behind must show up in the report
        if ok == (cg.report.residual_cycles > 0) || ok == cg.report.iteration_cap_exceeded {
            silent += 1;
        }
    }
    let rate = 100.0 * acyclic as f64 / GRAPHS as f64;
    outcome(
        rate >= 99.0 && silent == 0 && slow == 0,
        format!(
            "fixture split {} time(s); {acyclic}/{GRAPHS} random graphs acyclic within 2 passes ({rate:.1}%), max passes {max_passes}, unreported residuals {silent}, slowest {:.2} ms",
            cg.report.splits.len(),
            ms(slowest)
        ),
    )
}

fn pruning_conservation() -> Outcome {
    let (mut states, mut pairs) = (0, 0);
    for (name, raw) in all_fixtures() {
        let pg = Arc::new(process(&name, &raw));
        let reach = Reach::new(&pg);
        for threshold in [1, threshold_for(&name), usize::MAX] {
            let opts = SessionOptions {
                module_threshold: threshold,
                ..SessionOptions::default()
            };
            for f in frontiers(&pg) {
                let vis = visible(&pg, f, &opts);
                let st = vis.stacked();
                if let Err(e) = check_conservation(&pg, &st.edges, &st.chains, |x| vis.visible_rep(x).unwrap()) {
                    return outcome(false, format!("{name} threshold {threshold}: {e}"));
                }
                if let Err(e) = check_lifted_reachability(&vis, &reach) {
                    return outcome(false, format!("{name} threshold {threshold}: {e}"));
                }
                states += 1;
                pairs += st.nodes.len() * st.nodes.len();
            }
        }
    }
    outcome(true, format!("{states} expansion states, {pairs} visible pairs, zero discrepancies"))
}

fn isomorphism_oracle() -> Outcome {
    let mut checked = 0;
    let mut graphs: Vec<(String, cgs_core::RawGraph)> = all_fixtures();
    graphs.extend((0..100).map(|s| (format!("random{s}"), random_hierarchical_dag(s, 60))));
    for (name, raw) in graphs {
        let pg = process(&name, &raw);
        for f in frontiers(&pg) {
            let groups = detect_iso_groups(&pg, &f);
            match check_groups(&pg, &f, &groups, 8) {
                Ok(n) => checked += n,
                Err(e) => return outcome(false, format!("{name}: {e}")),
            }
        }
    }
    outcome(checked > 0, format!("{checked} groups of <= 8 nodes agree with brute-force isomorphism; 0 false merges"))
}

fn cgs(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_cgs")).args(args).output().expect("cgs runs")
}

fn element_reduction(dir: &Path) -> Outcome {
    let file = dir.join("resnet_like.json");
    std::fs::write(&file, emit_graph_file(&resnet_like())).unwrap();
    let raw = resnet_like();
    let ops = raw.nodes.iter().filter(|n| n.kind.is_operation()).count();
    let families = resnet_like_stages().len();
    let t = Instant::now();
    let o = cgs(&["stats", "--input", file.to_str().unwrap(), "--depth", "3"]);
    let took = t.elapsed();
    if !o.status.success() {
        return outcome(false, String::from_utf8_lossy(&o.stderr).into_owned());
    }
    let text = String::from_utf8_lossy(&o.stdout);
    let Some(row) = text.lines().find(|l| l.starts_with("3,")) else {
        return outcome(false, "no depth-3 row");
    };
    let pct: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
    outcome(
        pct >= 50.0 && ops >= 1000 && families == 4 && took < Duration::from_secs(2),
        format!("{ops} operators in {families} block families; depth 3 row {row}; reduction {pct:.1}% in {:.0} ms", ms(took)),
    )
}

fn scale() -> Outcome {
    let bytes = emit_graph_file(&scale_graph(10_000));
    let mut worst = Duration::ZERO;
    let mut nodes = 0;
    for depth in [1, 3, usize::MAX] {
        let t = Instant::now();
        let raw = parse_graph_file(&bytes).unwrap();
        nodes = raw.nodes.len();
        let pg = Arc::new(build_hierarchy(&raw).unwrap());
        let mut s = cgs_core::Session::new(pg, SessionOptions::default()).unwrap();
        s.expand_to_depth(depth);
        let vis = s.derive_visible().unwrap();
        layout_graph(&vis, &LayoutParams::default()).unwrap();
        worst = worst.max(t.elapsed());
    }
    outcome(
        nodes >= 10_000 && worst < Duration::from_secs(5),
        format!("{nodes} nodes, slowest parse+derive+layout {:.0} ms (collapsed, depth 3, fully expanded)", ms(worst)),
    )
}

fn layout_invariants() -> Outcome {
    let p = LayoutParams::default();
    let mut layouts = 0;
    for (name, raw) in all_fixtures() {
        let pg = Arc::new(process(&name, &raw));
        for f in frontiers(&pg) {
            let vis = visible(&pg, f, &options_for(&name));
            let l = match layout_graph(&vis, &p) {
                Ok(l) => l,
                Err(e) => return outcome(false, format!("{name}: {e}")),
            };
            let bad = layout_violations(&vis, &l, &p);
            if let Some(b) = bad.first() {
                return outcome(false, format!("{name}: {b} ({} violations)", bad.len()));
            }
            if let Some(r) = l.routes.iter().find(|r| r.arcs.len() + 2 != r.points.len()) {
                return outcome(false, format!("{name}: edge {} has a bend without an arc", r.edge));
            }
            let mut again = stable_relayout(&l, &vis, &p, None).unwrap();
            again.correspondence = None;
            if again != l {
                return outcome(false, format!("{name}: relayout moved something"));
            }
            layouts += 1;
        }
    }
    outcome(true, format!("{layouts} layouts clean; unchanged relayouts coordinate-identical"))
}

fn determinism(dir: &Path) -> Outcome {
    let mut compared = 0;
    for (name, raw) in all_fixtures() {
        let input = dir.join(format!("{name}.json"));
        std::fs::write(&input, emit_graph_file(&raw)).unwrap();
        let threshold = threshold_for(&name).to_string();
        let mut runs = Vec::new();
        for run in 0..2 {
            let files: Vec<_> = ["json", "layout.json", "svg"]
                .iter()
                .map(|ext| dir.join(format!("{name}.{run}.{ext}")))
                .collect();
            let o = cgs(&[
                "simplify",
                "--input",
                input.to_str().unwrap(),
                "--depth",
                "3",
                "--cgm",
                "--threshold",
                &threshold,
                "--out",
                files[0].to_str().unwrap(),
                "--layout",
                files[1].to_str().unwrap(),
                "--svg",
                files[2].to_str().unwrap(),
            ]);
            let stats = cgs(&["stats", "--input", input.to_str().unwrap(), "--threshold", &threshold]);
            if !o.status.success() || !stats.status.success() {
                return outcome(false, format!("{name}: cli failed"));
            }
            let mut out: Vec<Vec<u8>> = files.iter().map(|f| std::fs::read(f).unwrap()).collect();
            out.push(stats.stdout);
            runs.push(out);
        }
        if runs[0] != runs[1] {
            return outcome(false, format!("{name}: outputs differ between runs"));
        }
        compared += runs[0].len();
    }
    outcome(true, format!("{compared} JSON/SVG/CSV artefacts byte-identical across two runs"))
}

fn path_finding() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut queries = 0;
    for (name, raw) in all_fixtures() {
        let pg = Arc::new(process(&name, &raw));
        let reach = Reach::new(&pg);
        let n = pg.tree.len();
        for f in [Frontier::top_level(&pg), Frontier::to_depth(&pg, 3), Frontier::full(&pg)] {
            let vis = visible(&pg, f, &options_for(&name));
            let pairs: Vec<(NodeIx, NodeIx)> = if n <= 300 {
                (1..n).flat_map(|a| (1..n).map(move |b| (a, b))).collect()
            } else {
                (0..3000).map(|_| (rng.gen_range(1..n), rng.gen_range(1..n))).collect()
            };
            for (a, b) in pairs {
                let r = find_path(&vis, a, b);
                if let Err(e) = check_path(&pg, &vis, &reach, a, b, &r) {
                    return outcome(false, format!("{name}: {e}"));
                }
                queries += 1;
            }
        }
    }
    outcome(true, format!("{queries} queries agree with BFS reachability"))
}

fn main() {
    let dir = tempfile::TempDir::new().unwrap();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("cycle removal", Box::new(cycle_removal)),
        ("pruning conservation", Box::new(pruning_conservation)),
        ("isomorphism oracle", Box::new(isomorphism_oracle)),
        ("element reduction", Box::new(|| element_reduction(dir.path()))),
        ("scale", Box::new(scale)),
        ("layout invariants", Box::new(layout_invariants)),
        ("determinism", Box::new(|| determinism(dir.path()))),
        ("path finding", Box::new(path_finding)),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        let r = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !r.pass {
            failed += 1;
        }
        println!("[{}] {name}: {}", if r.pass { "PASS" } else { "FAIL" }, r.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
