use std::process::{Command, Output};

use serde_json::Value;

fn kagome(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kagome")).args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn enumerate_reports_graph_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let dot = dir.path().join("g.dot");
    let graph = dir.path().join("g.json");
    let out = kagome(&[
        "enumerate",
        "--region",
        "lozenge:2",
        "--dot",
        dot.to_str().unwrap(),
        "--graph",
        graph.to_str().unwrap(),
    ]);
    let v = stdout_json(&out);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["nodes"], 11);
    assert_eq!(v["connected"], true);
    assert_eq!(v["region"]["tiles"], 4);
    assert!(std::fs::read_to_string(dot).unwrap().starts_with("graph"));
    let g: Value = serde_json::from_str(&std::fs::read_to_string(graph).unwrap()).unwrap();
    assert_eq!(g["nodes"].as_array().unwrap().len(), 11);

    let r = stdout_json(&kagome(&["enumerate", "--region", "lozenge:2", "--variant", "restrained"]));
    assert_eq!(r["nodes"], 7);
    assert_eq!(r["minima"], 1);
}

#[test]
fn samples_are_reproducible_and_valid() {
    let args = ["sample", "--region", "lozenge:2", "--variant", "weighted:1/2", "--seed", "11", "--samples", "6"];
    let a = kagome(&args);
    let b = kagome(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 6);
    for line in lines {
        kagome::Tiling::from_json(line).expect("each line is a tiling");
    }
}

#[test]
fn sample_file_round_trips_through_render() {
    let dir = tempfile::tempdir().unwrap();
    let tiling = dir.path().join("t.json");
    let svg = dir.path().join("t.svg");
    let out = kagome(&["sample", "--region", "square:3", "--seed", "5", "--out", tiling.to_str().unwrap()]);
    assert!(out.status.success());
    let out = kagome(&["render", "--in", tiling.to_str().unwrap(), "--out", svg.to_str().unwrap(), "--heights", "--flips"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg") || text.starts_with("<?xml"));
    assert_eq!(text.matches("<path class=\"tile").count(), 9);
    assert!(text.contains("<text"));
}

#[test]
fn prototiles_render_without_input() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("p.svg");
    let out = kagome(&["render", "--prototiles", "--out", svg.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(std::fs::read_to_string(svg).unwrap().matches("<path class=\"tile").count(), 3);
}

#[test]
fn mixing_time_agrees_across_arithmetic() {
    let f = stdout_json(&kagome(&["mix", "--region", "lozenge:2", "--eps", "1/4"]));
    let e = stdout_json(&kagome(&["mix", "--region", "lozenge:2", "--eps", "1/4", "--exact"]));
    assert_eq!(f["mixing_time"], e["mixing_time"]);
    assert!(f["mixing_time"].as_u64().unwrap() > 0);
}

#[test]
fn ledger_reports_the_worst_pair() {
    let v = stdout_json(&kagome(&["ledger", "--region", "lozenge:3"]));
    assert_eq!(v["summary"]["worst"], "1/16");
    assert!(v["witness"]["a"].is_object());
    assert!(v["positive_entries"].as_u64().unwrap() > 0);
}

#[test]
fn bench_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("b.csv");
    let v = stdout_json(&kagome(&[
        "bench", "--sizes", "2,3,4", "--trials", "4", "--seed", "7", "--csv", csv.to_str().unwrap(),
    ]));
    assert_eq!(v["sizes"].as_array().unwrap().len(), 3);
    assert!(v["exponent"].as_f64().unwrap().is_finite());
    let text = std::fs::read_to_string(csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), "n,N_tiles,N_inner_vertices,trial,steps,seed");
    assert_eq!(text.lines().count(), 1 + 12);
}

#[test]
fn minimal_tiling_is_restrained() {
    let out = kagome(&["minimal", "--region", "lozenge:3"]);
    assert!(out.status.success());
    let t = kagome::Tiling::from_json(std::str::from_utf8(&out.stdout).unwrap().trim()).unwrap();
    assert!(t.is_restrained());
    assert_eq!(t.type_counts().1, 0);
}

#[test]
fn verify_reports_every_suite() {
    let out = kagome(&["verify", "--seed", "1", "--ops", "300"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["suites"].as_array().unwrap().len(), 6);
    let all_pass = v["suites"].as_array().unwrap().iter().all(|s| s["violations"] == 0);
    assert_eq!(out.status.success(), all_pass);
}

#[test]
fn domain_errors_are_structured() {
    let out = kagome(&["sample", "--region", "lozenge:0", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["schema_version"], 1);
    assert_eq!(err["error"], "invalid_parameter");

    let out = kagome(&["sample", "--region", "hexagon:3", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(1));

    let out = kagome(&["mix", "--region", "lozenge:2", "--variant", "weighted:-1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(kagome(&["sample", "--region", "lozenge:2"]).status.code(), Some(2));
    assert_eq!(kagome(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn node_cap_is_read_from_the_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_kagome"))
        .args(["enumerate", "--region", "lozenge:3"])
        .env("KAGOME_NODE_CAP", "10")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "cap_exceeded");
}

#[test]
fn region_files_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    std::fs::write(&path, kagome::make_lozenge_region(2).unwrap().to_json()).unwrap();
    let v = stdout_json(&kagome(&["enumerate", "--region", path.to_str().unwrap()]));
    assert_eq!(v["nodes"], 11);
}
