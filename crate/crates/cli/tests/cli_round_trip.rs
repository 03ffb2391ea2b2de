//! End-to-end runs of the `blossom` binary.

use std::process::Command;

fn blossom() -> Command {
    Command::new(env!("CARGO_BIN_EXE_blossom"))
}

#[test]
fn graph_decode_bench_stats_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let graph_path = dir.path().join("graph.json");
    let csv_path = dir.path().join("bench.csv");

    let out = blossom()
        .args(["graph", "--code", "surface", "-d", "3", "--rounds", "3", "--p", "0.01"])
        .arg("-o")
        .arg(&graph_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{out:?}");

    // batch syndrome document
    let syndrome_path = dir.path().join("syndrome.json");
    std::fs::write(&syndrome_path, r#"{"defects": [0, 1]}"#).unwrap();
    let out = blossom()
        .arg("decode")
        .arg("--graph")
        .arg(&graph_path)
        .arg("--syndrome")
        .arg(&syndrome_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{out:?}");
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("weight: 28"), "{stdout}");

    // stream syndrome document decodes to the same weight
    std::fs::write(&syndrome_path, r#"{"rounds": [[0, 1], [], []]}"#).unwrap();
    let out = blossom()
        .arg("decode")
        .arg("--graph")
        .arg(&graph_path)
        .arg("--syndrome")
        .arg(&syndrome_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{out:?}");
    assert!(String::from_utf8(out.stdout).unwrap().contains("weight: 28"));

    let out = blossom()
        .args([
            "bench", "--code", "surface", "-d", "3", "--rounds", "3", "--p", "0.02", "--shots",
            "500", "--seed", "5", "--verify-oracle",
        ])
        .arg("-o")
        .arg(&csv_path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{out:?}");

    let out = blossom()
        .arg("stats")
        .arg("-i")
        .arg(&csv_path)
        .args(["-d", "3", "--cycles-per-round", "20"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{out:?}");
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("effective logical error rate"), "{stdout}");
}

#[test]
fn verify_subcommand_passes_and_selftest_catches() {
    let out = blossom()
        .args([
            "verify",
            "--code",
            "repetition",
            "-d",
            "3",
            "--p",
            "0.05",
            "--shots",
            "50",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{out:?}");
    assert!(String::from_utf8(out.stdout).unwrap().contains("[pass]"));

    // the corrupted-solver hook must flip the exit code and report seeds
    let out = blossom()
        .args([
            "verify",
            "--code",
            "repetition",
            "-d",
            "3",
            "--p",
            "0.05",
            "--shots",
            "20",
            "--corrupt-selftest",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("FAIL"), "{stdout}");
    assert!(stdout.contains("seed"), "{stdout}");
}

#[test]
fn decode_reports_format_errors() {
    let dir = tempfile::tempdir().unwrap();
    let graph_path = dir.path().join("bad.json");
    std::fs::write(&graph_path, r#"{"vertices": [], "max_weight": 14, "weight_scale": 2}"#)
        .unwrap();
    let syndrome_path = dir.path().join("s.json");
    std::fs::write(&syndrome_path, r#"{"defects": []}"#).unwrap();
    let out = blossom()
        .arg("decode")
        .arg("--graph")
        .arg(&graph_path)
        .arg("--syndrome")
        .arg(&syndrome_path)
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("edges"), "{stderr}");
}
