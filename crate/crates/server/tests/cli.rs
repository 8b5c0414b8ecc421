use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::sync::Arc;
use std::time::{Duration, Instant};

use cgs_core::visible::stats_csv;
use cgs_core::{parse_graph_file, Session};
use cgs_testkit::{fixture_path, load, options_for, process};
use tempfile::TempDir;

fn cgs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cgs")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simplify_matches_the_library_pipeline() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("v.json");
    let input = fixture_path("lenet");
    let o = cgs(&["simplify", "--input", path(&input), "--depth", "2", "--cgm", "--threshold", "3", "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let written = std::fs::read(&out).unwrap();

    let pg = Arc::new(process("lenet", &load("lenet")));
    let opts = cgs_core::SessionOptions {
        cgm: true,
        ..options_for("lenet")
    };
    let mut s = Session::new(pg, opts).unwrap();
    s.expand_to_depth(2);
    // one depth change on both sides, so the revisions agree too
    assert_eq!(written, s.derive_visible().unwrap().to_json());
    let v: serde_json::Value = serde_json::from_slice(&written).unwrap();
    assert_eq!(v["options"]["cgm"], true);
    assert!(v["cycle_report"].is_object());
}

#[test]
fn simplify_prints_to_stdout_by_default() {
    let o = cgs(&["simplify", "--input", path(&fixture_path("cycle"))]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let nodes: Vec<&str> = v["nodes"].as_array().unwrap().iter().map(|n| n["path"].as_str().unwrap()).collect();
    assert_eq!(nodes, ["G1", "G2"]);
}

#[test]
fn layout_svg_and_report_outputs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let run = |tag: &str| {
        let files = ["layout", "svg", "report"].map(|k| dir.path().join(format!("{tag}.{k}")));
        let o = cgs(&[
            "simplify",
            "--input",
            path(&fixture_path("port_design")),
            "--depth",
            "3",
            "--cgm",
            "--threshold",
            "4",
            "--layout",
            path(&files[0]),
            "--svg",
            path(&files[1]),
            "--scale",
            "1.5",
            "--report",
            path(&files[2]),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty());
        files.map(|f| std::fs::read(f).unwrap())
    };
    let a = run("a");
    let b = run("b");
    assert_eq!(a, b);
    let svg = String::from_utf8(a[1].clone()).unwrap();
    assert!(svg.starts_with("<svg"));
    let layout: serde_json::Value = serde_json::from_slice(&a[0]).unwrap();
    let w = layout["width"].as_f64().unwrap();
    assert!(svg.contains(&format!("width=\"{}\"", w * 1.5)));
    let report: serde_json::Value = serde_json::from_slice(&a[2]).unwrap();
    assert_eq!(report["residual_cycles"], 0);
    assert_eq!(report["iteration_cap_exceeded"], false);
}

#[test]
fn exit_codes_follow_the_error_class() {
    let dir = TempDir::new().unwrap();
    let missing = cgs(&["simplify", "--input", "/nonexistent/g.json"]);
    assert_eq!(missing.status.code(), Some(1));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"format_version\": \"1\",\n  \"name\": \"x\",\n  \"nodes\": [\n    {\"name\": }\n").unwrap();
    let o = cgs(&["simplify", "--input", path(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line"), "{err}");

    let dangling = dir.path().join("dangling.json");
    std::fs::write(
        &dangling,
        r#"{"format_version": "1", "name": "d", "nodes": [{"name": "a", "kind": "operation", "op_type": "X"}], "edges": [{"src": "a", "dst": "b"}]}"#,
    )
    .unwrap();
    let o = cgs(&["simplify", "--input", path(&dangling)]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));

    let o = cgs(&["simplify", "--input", path(&fixture_path("lenet")), "--expand", "nowhere"]);
    assert_eq!(o.status.code(), Some(3));
    let o = cgs(&["simplify", "--input", path(&fixture_path("lenet")), "--min-repeat", "1"]);
    assert_eq!(o.status.code(), Some(3));
    let o = cgs(&["simplify", "--input", path(&fixture_path("lenet")), "--out", "/nonexistent/dir/v.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn expand_opens_ancestors() {
    let o = cgs(&["simplify", "--input", path(&fixture_path("port_design")), "--threshold", "4", "--expand", "Main/network_train"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["expanded"], serde_json::json!(["Main", "Main/network_train"]));
}

#[test]
fn stats_on_two_top_level_groups() {
    let o = cgs(&["stats", "--input", path(&fixture_path("cycle")), "--depth", "1"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "depth,raw_nodes,raw_edges,vis_nodes,vis_edges,reduction_pct");
    assert!(lines[1].starts_with("1,2,"), "{}", lines[1]);
}

/// Unsimplified counts at each depth, recomputed from the leaf graph.
fn exhaustive_counts(pg: &cgs_core::ProcessedGraph, depth: usize) -> (usize, usize) {
    let tree = &pg.tree;
    let visible = |ix: usize| tree.depth(ix) == depth || (tree.depth(ix) < depth && !tree.is_meta(ix));
    let nodes = (1..tree.len()).filter(|&i| visible(i)).count();
    let cover = |mut x: usize| {
        while tree.depth(x) > depth {
            x = tree.parent(x).unwrap();
        }
        x
    };
    let edges: BTreeSet<(usize, usize)> = pg
        .leaf_edges
        .iter()
        .map(|e| (cover(e.src), cover(e.dst)))
        .filter(|(a, b)| a != b)
        .collect();
    (nodes, edges.len())
}

#[test]
fn generated_resnet_stats_match_exhaustive_counts() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("resnet_like.json");
    let o = cgs(&["generate", "--preset", "resnet-like", "--out", path(&file)]);
    assert!(o.status.success());
    let o = cgs(&["simplify", "--input", path(&file), "--depth", "3", "--stats"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();

    let raw = parse_graph_file(&std::fs::read(&file).unwrap()).unwrap();
    let pg = Arc::new(process("resnet_like", &raw));
    let s = Session::new(pg.clone(), cgs_core::SessionOptions::default()).unwrap();
    assert_eq!(text, stats_csv(&s.stats_by_depth(3).unwrap()));
    for (d, line) in text.lines().skip(1).enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        let (n, e) = exhaustive_counts(&pg, d + 1);
        assert_eq!(cols[1].parse::<usize>().unwrap(), n, "depth {}", d + 1);
        assert_eq!(cols[2].parse::<usize>().unwrap(), e, "depth {}", d + 1);
    }
}

#[test]
fn generate_presets_and_specs() {
    let o = cgs(&["generate", "--preset", "bert-like", "--layers", "3"]);
    assert!(o.status.success());
    let raw = parse_graph_file(&o.stdout).unwrap();
    assert!(raw.nodes.iter().any(|n| n.id.as_str().contains("encoder/2_layer")), "third layer present");

    let o = cgs(&["generate", "--preset", "scale", "--nodes", "2000"]);
    assert!(parse_graph_file(&o.stdout).unwrap().nodes.len() >= 2000);

    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("mine.json");
    let specs = cgs_core::synth::resnet_like_stages();
    std::fs::write(&spec, serde_json::to_vec(&specs[..2]).unwrap()).unwrap();
    let o = cgs(&["generate", "--spec", path(&spec)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let raw = parse_graph_file(&o.stdout).unwrap();
    assert_eq!(raw.name, "mine");
    std::fs::write(&spec, b"{").unwrap();
    assert_eq!(cgs(&["generate", "--spec", path(&spec)]).status.code(), Some(2));
    assert_eq!(cgs(&["generate"]).status.code(), Some(2));
}

fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

fn get(port: u16, uri: &str) -> Option<String> {
    let mut s = TcpStream::connect(("127.0.0.1", port)).ok()?;
    s.set_read_timeout(Some(Duration::from_secs(5))).ok()?;
    write!(s, "GET {uri} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").ok()?;
    let mut out = String::new();
    s.read_to_string(&mut out).ok()?;
    Some(out)
}

#[test]
fn serve_reads_the_port_from_the_environment() {
    let dir = TempDir::new().unwrap();
    std::fs::copy(fixture_path("lenet"), dir.path().join("lenet.json")).unwrap();
    let port = free_port();
    let mut child = Command::new(env!("CARGO_BIN_EXE_cgs"))
        .args(["serve", "--graphs", path(dir.path())])
        .env("CGS_PORT", port.to_string())
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let start = Instant::now();
    let reply = loop {
        if let Some(r) = get(port, "/graphs") {
            break r;
        }
        assert!(start.elapsed() < Duration::from_secs(20), "server did not come up");
        std::thread::sleep(Duration::from_millis(50));
    };
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(reply.starts_with("HTTP/1.1 200"), "{reply}");
    assert!(reply.contains("\"lenet\""));
}

#[test]
fn serve_rejects_a_missing_directory() {
    let o = cgs(&["serve", "--graphs", "/nonexistent/graphs"]);
    assert_eq!(o.status.code(), Some(1));
}
