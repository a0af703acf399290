//! End-to-end checks of the command-line surface: exit codes, summary
//! determinism, trace files and the golden replays.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn anonshm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_anonshm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("summary is valid JSON")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn replay_fig2_matches_golden_and_exits_zero() {
    let out = anonshm(&["replay", "--builtin", "fig2"]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let summary = stdout_json(&out);
    assert_eq!(summary["rows_matched"], 13);
    assert_eq!(summary["cycle_start"], 20);
    assert_eq!(summary["lasso"]["stable_views"], serde_json::json!([[1], [1, 2], [1, 3]]));
}

#[test]
fn replay_covering_holds() {
    for n in ["2", "3", "4", "5"] {
        let out = anonshm(&["replay", "--builtin", &format!("covering:{n}")]);
        assert!(out.status.success());
        let summary = stdout_json(&out);
        assert_eq!(summary["checks"][0]["check"], "covering_no_trace_of_p");
        assert_eq!(summary["checks"][0]["verdict"], "HOLDS");
    }
}

#[test]
fn simulate_writes_trace_and_check_verifies_it() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "snap.json",
        r#"{"n_processors":3,"n_registers":3,"algorithm":"snapshot","inputs":[1,2,3],
           "perms":{"explicit":[[1,2,3],[1,2,3],[1,2,3]]},
           "schedule":{"kind":"random","seed":7,"max_steps":10000}}"#,
    );
    let trace_path = dir.path().join("run.jsonl");
    let out = anonshm(&["simulate", &config, "--trace", trace_path.to_str().unwrap()]);
    assert!(out.status.success());
    let summary = stdout_json(&out);
    assert_eq!(summary["checks"][0]["verdict"], "HOLDS");

    // Summaries are bit-identical across repeated runs of (config, seed).
    let again = anonshm(&["simulate", &config, "--trace", trace_path.to_str().unwrap()]);
    assert_eq!(out.stdout, again.stdout);

    let check = anonshm(&["check", trace_path.to_str().unwrap()]);
    assert!(check.status.success(), "stderr: {}", String::from_utf8_lossy(&check.stderr));
    let checked = stdout_json(&check);
    assert_eq!(checked["outputs"], summary["outputs"]);

    // A corrupted trace is rejected.
    let text = fs::read_to_string(&trace_path).unwrap();
    let corrupted = text.replace("\"digest\":\"", "\"digest\":\"0000");
    let bad_path = dir.path().join("bad.jsonl");
    fs::write(&bad_path, corrupted).unwrap();
    let bad = anonshm(&["check", bad_path.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn explore_writescan_reports_wait_freedom_violation() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "ws.json",
        r#"{"n_processors":2,"n_registers":1,"algorithm":"write_scan","inputs":[1,2],
           "perms":{"explicit":[[1],[1]]},
           "schedule":{"kind":"exhaustive"}}"#,
    );
    let out = anonshm(&["explore", &config]);
    assert_eq!(out.status.code(), Some(2), "a cycle is a wait-freedom violation");
    let summary = stdout_json(&out);
    assert_eq!(summary["wait_free"]["verdict"], "VIOLATED");
    assert!(summary["wait_free"]["cycle_len"].as_u64().unwrap() > 0);
}

#[test]
fn explore_snapshot_small_holds_and_finds_terminals() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "snap2.json",
        r#"{"n_processors":2,"n_registers":2,"algorithm":"snapshot","inputs":[1,2],
           "perms":{"explicit":[[1,2],[1,2]]},
           "schedule":{"kind":"exhaustive"}}"#,
    );
    let out = anonshm(&["explore", &config]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let summary = stdout_json(&out);
    assert_eq!(summary["wait_free"], "HOLDS");
    assert_eq!(summary["truncated"], false);
    assert!(summary["terminals"].as_u64().unwrap() > 0);
    let checks = summary["checks"].as_array().unwrap();
    for name in ["wait_free", "snapshot_task", "group_solvability", "durably_stored"] {
        assert!(
            checks.iter().any(|c| c["check"] == name && c["verdict"] == "HOLDS"),
            "{name} missing or not HOLDS: {checks:?}"
        );
    }
}

#[test]
fn explore_consensus_bounded_is_safe() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "cons.json",
        r#"{"n_processors":2,"n_registers":2,"algorithm":"consensus","inputs":[1,2],
           "perms":{"explicit":[[1,2],[1,2]]},
           "schedule":{"kind":"exhaustive","ts_cap":3}}"#,
    );
    let out = anonshm(&["explore", &config]);
    let summary = stdout_json(&out);
    let checks = summary["checks"].as_array().unwrap();
    assert!(checks
        .iter()
        .any(|c| c["check"] == "consensus_agreement" && c["verdict"] == "HOLDS"));
    assert!(summary["frontier_states"].as_u64().unwrap() > 0);
    // Wait-freedom is violated for consensus (only obstruction-free), so a
    // nonzero exit is expected; agreement and validity must hold.
    assert!(checks
        .iter()
        .any(|c| c["check"] == "consensus_validity" && c["verdict"] == "HOLDS"));
}

#[test]
fn explore_graph_export_is_replayable_size() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "snap2.json",
        r#"{"n_processors":2,"n_registers":2,"algorithm":"snapshot","inputs":[1,1],
           "perms":{"explicit":[[1,2],[1,2]]},
           "schedule":{"kind":"exhaustive"}}"#,
    );
    let graph = dir.path().join("graph.jsonl");
    let dot = dir.path().join("graph.dot");
    let out = anonshm(&[
        "explore",
        &config,
        "--graph-out",
        graph.to_str().unwrap(),
        "--dot",
        dot.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let summary = stdout_json(&out);
    let text = fs::read_to_string(&graph).unwrap();
    let nodes = text.lines().filter(|l| l.contains("\"node\"")).count();
    let edges = text.lines().filter(|l| l.contains("\"edge\"")).count();
    assert_eq!(nodes as u64, summary["states"].as_u64().unwrap());
    assert_eq!(edges as u64, summary["edges"].as_u64().unwrap());
    let dot_text = fs::read_to_string(&dot).unwrap();
    assert!(dot_text.starts_with("digraph states {"));
    assert!(dot_text.trim_end().ends_with('}'));
}

#[test]
fn missing_config_fails_without_partial_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace_path = dir.path().join("never.jsonl");
    let out = anonshm(&[
        "simulate",
        dir.path().join("nope.json").to_str().unwrap(),
        "--trace",
        trace_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!trace_path.exists());
}
