mod common;

use std::path::Path;
use std::process::Command;

use common::{geolag, masked_json, masked_tree, stderr, tiny_config, tree_differences};

fn ok(args: &[&str]) -> String {
    let o = geolag(args);
    assert!(o.status.success(), "{args:?} failed: {}", stderr(&o));
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn unknown_config_key_exits_2_naming_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.json");
    std::fs::write(&cfg, r#"{"learners": {"gbm": {"n_iters": 3}}}"#).unwrap();
    let o = geolag(&["pipeline", "--config", s(&cfg), "--out", s(&tmp.path().join("run"))]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("learners.gbm.n_iters"), "{}", stderr(&o));
    assert!(!tmp.path().join("run").exists());
}

#[test]
fn invalid_value_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.json");
    std::fs::write(&cfg, r#"{"radius_m": -5}"#).unwrap();
    let o = geolag(&["index", "--config", s(&cfg), "--out", s(&tmp.path().join("run"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("radius_m"), "{}", stderr(&o));

    let o = geolag(&["features", "--kind", "nearby", "--out", s(&tmp.path().join("run"))]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn missing_inputs_point_to_the_producing_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path());
    let run = tmp.path().join("run");
    let (cfg, run) = (s(&cfg), s(&run));

    let o = geolag(&["index", "--config", cfg, "--out", run]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("ingest"), "{}", stderr(&o));

    ok(&["synth", "--config", cfg, "--out", run]);
    ok(&["ingest", "--config", cfg, "--out", run]);
    let o = geolag(&["features", "--kind", "spatial", "--config", cfg, "--out", run]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("index"), "{}", stderr(&o));

    let o = geolag(&["train", "--config", cfg, "--out", run]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("features"), "{}", stderr(&o));
}

#[test]
fn stage_by_stage_matches_the_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path());
    let (staged, whole) = (tmp.path().join("staged"), tmp.path().join("whole"));
    let (cfg, staged_s) = (s(&cfg), s(&staged));

    ok(&["synth", "--config", cfg, "--out", staged_s]);
    ok(&["ingest", "--config", cfg, "--out", staged_s]);
    ok(&["index", "--config", cfg, "--out", staged_s]);
    ok(&["features", "--config", cfg, "--out", staged_s]);
    ok(&["train", "--stage", "2", "--config", cfg, "--out", staged_s]);
    let table = ok(&["evaluate", "--stage", "2", "--config", cfg, "--out", staged_s]);
    assert!(table.contains("spatial"), "{table}");
    ok(&["pipeline", "--config", cfg, "--out", s(&whole)]);

    let a = masked_tree(&staged);
    let b = masked_tree(&whole);
    for artifact in [
        "panel.csv",
        "graph.csv",
        "features/spatial.csv",
        "stage2/metrics.json",
        "stage2/metrics.csv",
        "stage2/roc.csv",
        "stage2/rankings.json",
        "stage2/importance.json",
        "stage2/models/regression_spatial_ann.json",
    ] {
        assert!(a.contains_key(artifact), "{artifact} missing from the staged run");
        assert_eq!(a.get(artifact), b.get(artifact), "{artifact}");
    }
    // stage 1 only runs inside the pipeline here
    assert!(!staged.join("stage1").exists());
}

#[test]
fn evaluate_reproduces_stored_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path());
    let run = tmp.path().join("run");
    ok(&["pipeline", "--config", s(&cfg), "--out", s(&run)]);
    let before = std::fs::read(run.join("stage2/metrics.json")).unwrap();
    ok(&["evaluate", "--config", s(&cfg), "--out", s(&run)]);
    let after = std::fs::read(run.join("stage2/metrics.json")).unwrap();
    assert_eq!(before, after);
    assert_ne!(masked_json(&before), before, "metrics carry fit times");
}

#[test]
fn output_root_env_is_honored() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path());
    let root = tmp.path().join("root");
    let o = Command::new(env!("CARGO_BIN_EXE_geolag"))
        .args(["synth", "--config", s(&cfg), "--out", "relative-run"])
        .env("GEOLAG_OUTPUT_ROOT", &root)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(root.join("relative-run/raw/parcels.csv").is_file());
}

#[test]
fn bench_index_writes_its_table() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("bench.csv");
    ok(&["bench-index", "--n", "200,800", "--extent", "5000", "--out", s(&out)]);
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3, "{text}");
    assert!(lines[0].contains("grid_seconds") && lines[0].contains("brute_seconds"), "{text}");

    let o = geolag(&["bench-index", "--n", "800,200", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn masked_tree_ignores_only_timing() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    std::fs::write(root.join("timings.json"), "[1]").unwrap();
    std::fs::write(root.join("m.json"), r#"{"a":1,"runtime_seconds":2.5}"#).unwrap();
    std::fs::write(root.join("m.csv"), "a,runtime_seconds,b\n1,0.25,x\n").unwrap();
    let t = masked_tree(root);
    assert_eq!(t.keys().collect::<Vec<_>>(), ["m.csv", "m.json"]);
    assert_eq!(t["m.json"], br#"{"a":1}"#);
    assert_eq!(t["m.csv"], b"a,b\n1,x");
    let mut other = t.clone();
    other.insert("m.csv".into(), b"a,b\n2,x".to_vec());
    assert_eq!(tree_differences(&t, &other), ["m.csv"]);
}
