//! Helpers shared by the binary-level test targets.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

/// Keys and columns that hold wall-clock measurements.
pub const TIMING_FIELD: &str = "runtime_seconds";
pub const TIMINGS_FILE: &str = "timings.json";

pub fn geolag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geolag"))
        .args(args)
        .env_remove("GEOLAG_OUTPUT_ROOT")
        .output()
        .expect("geolag binary runs")
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// A run small enough to finish in seconds: 500 parcels over 5 years.
pub fn tiny_config(dir: &Path) -> PathBuf {
    let path = dir.join("tiny.json");
    let text = serde_json::json!({
        "input": {"synth": {"n_parcels": 500, "n_years": 5, "extent_m": 3000.0}},
        "learners": {
            "random_forest": {"n_trees": 8},
            "gbm": {"n_iter": 8},
            "ann": {"hidden": [8], "epochs": 3}
        },
        "seed": 7
    });
    std::fs::write(&path, serde_json::to_string_pretty(&text).unwrap()).unwrap();
    path
}

fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.remove(TIMING_FIELD);
            map.values_mut().for_each(strip_timing);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

/// JSON with every timing key removed, re-serialized compactly.
pub fn masked_json(bytes: &[u8]) -> Vec<u8> {
    let mut v: Value = serde_json::from_slice(bytes).expect("artifact is JSON");
    strip_timing(&mut v);
    serde_json::to_vec(&v).unwrap()
}

/// CSV with the timing column dropped; other bytes pass through.
pub fn masked_csv(bytes: &[u8]) -> Vec<u8> {
    let text = String::from_utf8(bytes.to_vec()).expect("artifact is UTF-8");
    let mut lines = text.lines();
    let Some(header) = lines.next() else { return bytes.to_vec() };
    let Some(col) = header.split(',').position(|h| h == TIMING_FIELD) else {
        return bytes.to_vec();
    };
    let drop = |line: &str| {
        line.split(',')
            .enumerate()
            .filter(|&(i, _)| i != col)
            .map(|(_, f)| f)
            .collect::<Vec<_>>()
            .join(",")
    };
    let mut out = drop(header);
    for line in lines {
        out.push('\n');
        out.push_str(&drop(line));
    }
    out.into_bytes()
}

fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
    let mut entries: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    for path in entries {
        if path.is_dir() {
            walk(root, &path, out);
            continue;
        }
        let rel = path.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
        if rel == TIMINGS_FILE {
            continue;
        }
        let bytes = std::fs::read(&path).unwrap();
        let masked = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => masked_json(&bytes),
            Some("csv") => masked_csv(&bytes),
            _ => bytes,
        };
        out.insert(rel, masked);
    }
}

/// Every artifact under `root` by relative path, timing fields masked and
/// the timings file skipped.
pub fn masked_tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

/// Relative paths whose masked contents differ, including files present on
/// one side only.
pub fn tree_differences(a: &BTreeMap<String, Vec<u8>>, b: &BTreeMap<String, Vec<u8>>) -> Vec<String> {
    let mut keys: Vec<&String> = a.keys().chain(b.keys()).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter().filter(|k| a.get(*k) != b.get(*k)).cloned().collect()
}
