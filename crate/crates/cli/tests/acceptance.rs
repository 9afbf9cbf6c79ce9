//! Reproducibility of command-line runs: a fixed seed yields byte-identical
//! CSV outputs across repeat invocations, and the command recorded in the
//! manifest replays a run exactly.

use std::fs;
use std::path::Path;
use std::process::Command;

use tempfile::tempdir;

const BIN: &str = env!("CARGO_BIN_EXE_fibersample");

fn run_ok(args: &[String], dir: &Path) {
    let out = Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "command {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
}

fn strs(args: &[&str]) -> Vec<String> {
    args.iter().map(|s| s.to_string()).collect()
}

fn read_manifest(dir: &Path) -> serde_json::Value {
    let text = fs::read_to_string(dir.join("manifest.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn read_outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    read_manifest(dir)["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|name| {
            let name = name.as_str().unwrap().to_string();
            let bytes = fs::read(dir.join(&name)).unwrap();
            (name, bytes)
        })
        .collect()
}

/// Everything in the manifest that must agree between reruns; timestamps
/// and the output directory inside the echoed command legitimately differ.
fn manifest_core(dir: &Path) -> serde_json::Value {
    let man = read_manifest(dir);
    serde_json::json!({
        "seed": man["seed"],
        "instance": man["instance"],
        "parameters": man["parameters"],
        "outputs": man["outputs"],
        "warnings": man["warnings"],
    })
}

fn replay_command(dir: &Path, new_out: &str) -> Vec<String> {
    let man = read_manifest(dir);
    let mut args: Vec<String> = man["command"]
        .as_array()
        .unwrap()
        .iter()
        .skip(1)
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    let pos = args.iter().position(|t| t == "--out").unwrap() + 1;
    args[pos] = new_out.to_string();
    args
}

fn check_replayable(base_args: &[&str]) {
    let tmp = tempdir().unwrap();
    let mut first = strs(base_args);
    first.extend(strs(&["--seed", "4242", "--out", "run1"]));
    run_ok(&first, tmp.path());

    let mut second = strs(base_args);
    second.extend(strs(&["--seed", "4242", "--out", "run2"]));
    run_ok(&second, tmp.path());

    let out1 = read_outputs(&tmp.path().join("run1"));
    let out2 = read_outputs(&tmp.path().join("run2"));
    assert!(!out1.is_empty(), "no outputs recorded for {base_args:?}");
    assert_eq!(out1, out2, "same seed gave different outputs for {base_args:?}");
    assert_eq!(
        manifest_core(&tmp.path().join("run1")),
        manifest_core(&tmp.path().join("run2")),
        "same seed gave different manifests for {base_args:?}"
    );

    let replay = replay_command(&tmp.path().join("run1"), "run3");
    run_ok(&replay, tmp.path());
    let out3 = read_outputs(&tmp.path().join("run3"));
    assert_eq!(out1, out3, "manifest replay diverged for {base_args:?}");
    assert_eq!(
        manifest_core(&tmp.path().join("run1")),
        manifest_core(&tmp.path().join("run3")),
        "manifest replay changed settings for {base_args:?}"
    );
}

#[test]
fn acceptance_11_runs_reproduce_from_seed_and_manifest() {
    check_replayable(&[
        "sample",
        "jobsat4x4",
        "--steps",
        "300",
        "--cells",
        "--density",
        "--grid-points",
        "80",
    ]);
    check_replayable(&["density", "jobsat4x4", "--base", "600", "--repeat", "2", "--plot"]);
    check_replayable(&[
        "mmd",
        "jobsat4x4",
        "--reference-size",
        "500",
        "--n",
        "60,120",
        "--trials",
        "2",
    ]);
    check_replayable(&[
        "fcs",
        "no3factor225",
        "--centers",
        "150",
        "--sample-size",
        "120",
        "--runs",
        "2",
        "--radii",
        "8,4,2",
    ]);
    println!(
        "PASS 11: seeded reruns and manifest replays are byte-identical across sample, density, mmd, fcs"
    );
}
