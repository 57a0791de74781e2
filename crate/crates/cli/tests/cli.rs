use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{Map, Value};
use tempfile::TempDir;

fn hsg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hsg")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = hsg(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn object(text: &str) -> Map<String, Value> {
    match serde_json::from_str(text).unwrap() {
        Value::Object(m) => m,
        other => panic!("not an object: {other}"),
    }
}

fn read_object(path: &Path) -> Map<String, Value> {
    object(&fs::read_to_string(path).unwrap())
}

fn without_meta(mut m: Map<String, Value>) -> Map<String, Value> {
    assert!(m.remove("meta").is_some(), "output lacks a meta block");
    m
}

fn rows(v: &Value) -> Vec<Vec<f64>> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|r| r.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect())
        .collect()
}

fn p(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// CSV rows after the `#` metadata line and the header.
fn csv_rows(text: &str) -> Vec<Vec<String>> {
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# {\"meta\""));
    lines.next().unwrap();
    lines.map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn generate_shapes() {
    let path = object(&ok(&["generate", "path", "--n", "4"]));
    assert_eq!(path["num_nodes"], 4);
    assert_eq!(path["edges"].as_array().unwrap().len(), 3);

    let grid = object(&ok(&["generate", "grid", "--rows", "2", "--cols", "4"]));
    assert_eq!(grid["num_nodes"], 8);
    assert_eq!(grid["edges"].as_array().unwrap().len(), 10);
    assert_eq!(grid["meta"]["config"]["rows"], 2);
}

#[test]
fn generate_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (p(&dir, "a.json"), p(&dir, "b.json"));
    for out in [&a, &b] {
        ok(&["generate", "er", "--n", "100", "--p", "0.05", "--seed", "7", "-o", s(out)]);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let other = ok(&["generate", "er", "--n", "100", "--p", "0.05", "--seed", "8"]);
    assert_ne!(fs::read_to_string(&a).unwrap(), other);
    let meta = &read_object(&a)["meta"];
    assert_eq!(meta["seed"], 7);
    assert_eq!(meta["tool"], "hsg");
}

#[test]
fn augment_summary_and_sizes() {
    let dir = TempDir::new().unwrap();
    let (g, h) = (p(&dir, "g.json"), p(&dir, "h.json"));
    ok(&["generate", "path", "--n", "4", "-o", s(&g)]);
    let summary = ok(&["augment", s(&g), "--schedule", "m:0.5,vn", "-o", s(&h)]);
    assert!(summary.starts_with("layers=2 nodes=7 edges=10 bound="), "{summary}");
    let obj = read_object(&h);
    assert_eq!(obj["num_nodes"], 7);
    assert_eq!(obj["layers"], serde_json::json!([[0, 4], [4, 6], [6, 7]]));
    assert_eq!(obj["meta"]["config"]["schedule"], "m:0.5,vn");

    ok(&["augment", s(&g), "--schedule", "vn", "-o", s(&h)]);
    assert_eq!(read_object(&h)["num_nodes"], 5);
}

#[test]
fn augment_then_strip_restores_input() {
    let dir = TempDir::new().unwrap();
    let input = p(&dir, "feat.json");
    fs::write(
        &input,
        r#"{"num_nodes":5,"edges":[[0,1],[0,4],[1,2],[2,3],[3,4]],
            "node_features":[[1,0],[2,1],[3,0],[4,1],[0.5,2]],
            "edge_features":[[1],[2],[3],[4],[5]]}"#,
    )
    .unwrap();
    // a bare graph is not an augmented graph
    assert_eq!(hsg(&["strip", s(&input)]).status.code(), Some(2));

    let (h, back) = (p(&dir, "h.json"), p(&dir, "back.json"));
    for (schedule, node, edge) in [("vn", "mean", "mean"), ("m:0.5,vn", "dummy", "mean"), ("r:0.5,r:0.5", "mean", "dummy")] {
        ok(&["augment", s(&input), "--schedule", schedule, "--node-impute", node, "--edge-impute", edge, "-o", s(&h)]);
        ok(&["strip", s(&h), "-o", s(&back)]);
        let restored = without_meta(read_object(&back));
        let original = object(&fs::read_to_string(&input).unwrap());
        assert_eq!(restored["num_nodes"], original["num_nodes"]);
        assert_eq!(restored["edges"], original["edges"]);
        assert_eq!(rows(&restored["node_features"]), rows(&original["node_features"]), "{schedule}");
        assert_eq!(rows(&restored["edge_features"]), rows(&original["edge_features"]), "{schedule}");
    }
}

#[test]
fn strip_is_byte_identical_to_generated_graph() {
    let dir = TempDir::new().unwrap();
    let (g, h, back) = (p(&dir, "g.json"), p(&dir, "h.json"), p(&dir, "back.json"));
    ok(&["generate", "tree", "--n", "40", "--seed", "3", "-o", s(&g)]);
    ok(&["augment", s(&g), "--schedule", "m:0.25,vn", "-o", s(&h)]);
    ok(&["strip", s(&h), "-o", s(&back)]);
    let canon = |m: Map<String, Value>| serde_json::to_string(&Value::Object(without_meta(m))).unwrap();
    assert_eq!(canon(read_object(&g)), canon(read_object(&back)));
}

#[test]
fn stats_rows_for_tree_batch() {
    let dir = TempDir::new().unwrap();
    let mut inputs = Vec::new();
    for seed in 0..100 {
        let f = p(&dir, &format!("t{seed}.json"));
        ok(&["generate", "tree", "--n", "30", "--seed", &seed.to_string(), "-o", s(&f)]);
        inputs.push(f);
    }
    let mut args = vec!["stats", "--config", "none", "--config", "vn", "--config", "m:0.25+vn"];
    args.extend(inputs.iter().map(|f| s(f)));
    let rows = csv_rows(&ok(&args));
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][..2], ["none", "-"]);
    assert_eq!(rows[1][..2], ["vn", "vn"]);
    assert_eq!(rows[2][..2], ["hsg", "m:0.25+vn"]);
    assert_eq!(rows[1][4], "2.0000");
    let anc = |r: &Vec<String>| r[9].parse::<f64>().unwrap();
    assert!(anc(&rows[1]) >= anc(&rows[0]));
    assert_eq!(anc(&rows[0]), 1.0);
}

#[test]
fn stats_single_path_and_worker_invariance() {
    let dir = TempDir::new().unwrap();
    let g = p(&dir, "g.json");
    ok(&["generate", "path", "--n", "4", "-o", s(&g)]);
    let rows = csv_rows(&ok(&["stats", s(&g)]));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][4], "3.0000");

    let e = p(&dir, "e.json");
    ok(&["generate", "er", "--n", "40", "--p", "0.2", "--seed", "1", "-o", s(&e)]);
    let one = ok(&["stats", s(&e), "--config", "vn", "--workers", "1"]);
    let many = ok(&["stats", s(&e), "--config", "vn", "--workers", "4"]);
    assert_eq!(one, many);
}

#[test]
fn stats_skips_disconnected_inputs() {
    let dir = TempDir::new().unwrap();
    let (good, bad) = (p(&dir, "good.json"), p(&dir, "bad.txt"));
    ok(&["generate", "cycle", "--n", "6", "-o", s(&good)]);
    fs::write(&bad, "n 4\n0 1\n2 3\n").unwrap();
    let out = hsg(&["stats", s(&good), s(&bad)]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("skipping"));
    assert_eq!(csv_rows(&String::from_utf8(out.stdout).unwrap()).len(), 1);
    assert_ne!(hsg(&["stats", s(&bad)]).status.code(), Some(0));
}

#[test]
fn verify_reports() {
    let size = object(&ok(&["verify", "--theorem", "4.1", "--n", "100", "--r", "0.5", "--trials", "100"]));
    assert_eq!(size["pass"], true);
    assert_eq!(size["theorem"], "4.1");
    assert_eq!(size["details"]["checked"], 100);
    assert!(size["meta"].is_object());

    let cross = object(&ok(&["verify", "--theorem", "B.1", "--n", "1000", "--p", "0.05", "--r", "0.1"]));
    assert_eq!(cross["pass"], true);
    assert!(cross["details"]["samples"].as_u64().unwrap() >= 2000);

    let regime = object(&ok(&["verify", "--theorem", "regime", "--beta", "0.5", "--trials", "5"]));
    assert_eq!(regime["details"]["verdict"], "constant");
}

#[test]
fn verify_failure_exits_one() {
    let out = hsg(&["verify", "--theorem", "4.2", "--n", "2000", "--beta", "0.25", "--trials", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(object(&String::from_utf8(out.stdout).unwrap())["pass"], false);
    let sparse = hsg(&["verify", "--theorem", "4.2", "--n", "2000", "--beta", "1.0", "--trials", "3"]);
    assert_eq!(sparse.status.code(), Some(0));
}

#[test]
fn propagate_on_long_path() {
    let dir = TempDir::new().unwrap();
    let (g, h) = (p(&dir, "g.json"), p(&dir, "h.json"));
    ok(&["generate", "path", "--n", "1000", "-o", s(&g)]);
    let schedule = ["m:0.5"; 10].join(",");
    ok(&["augment", s(&g), "--schedule", &schedule, "-o", s(&h)]);
    let rows = csv_rows(&ok(&["propagate", s(&h), "--source", "0", "--rounds", "25"]));
    assert_eq!(rows.len(), 26);
    assert_eq!(rows[20][2], "1.000000");
    assert_eq!(rows[0][1], "1");

    let plain = csv_rows(&ok(&["propagate", s(&g), "--rounds", "25", "--agg", "max", "--update", "replace"]));
    assert_eq!(plain[25][1], "26");
}

#[test]
fn partition_output() {
    let dir = TempDir::new().unwrap();
    let g = p(&dir, "g.json");
    ok(&["generate", "grid", "--rows", "4", "--cols", "4", "-o", s(&g)]);
    let bal = object(&ok(&["partition", s(&g), "--q", "2"]));
    assert_eq!(bal["edge_cut"], 4);
    assert_eq!(bal["sizes"], serde_json::json!([8, 8]));
    let rnd = object(&ok(&["partition", s(&g), "--r", "0.25", "--method", "random", "--seed", "2"]));
    assert_eq!(rnd["q"], 4);
    assert_eq!(hsg(&["partition", s(&g), "--q", "17"]).status.code(), Some(2));
}

#[test]
fn usage_and_parse_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let bad = p(&dir, "bad.txt");
    fs::write(&bad, "0 1\n1 2\nthree four\n").unwrap();
    let out = hsg(&["augment", s(&bad), "--schedule", "vn"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    assert_eq!(hsg(&["generate", "er", "--n", "10"]).status.code(), Some(2));
    assert_eq!(hsg(&["generate", "er", "--n", "10", "--p", "1.5"]).status.code(), Some(2));
    assert_eq!(hsg(&["augment", s(&bad), "--schedule", "q:0.5"]).status.code(), Some(2));
    assert_eq!(hsg(&["verify", "--theorem", "9.9"]).status.code(), Some(2));
}
