//! End-to-end tests of the command-line interface: every subcommand, the
//! validation exit codes, and byte-level determinism of CSV reports.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_crackmesh"))
}

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("crackmesh-cli-{tag}-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout_json(output: &Output) -> serde_json::Value {
    serde_json::from_slice(&output.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&output.stdout)
        )
    })
}

#[test]
fn generate_then_validate_round_trips() {
    let dir = workdir("roundtrip");
    let mesh_path = dir.join("theta.json");
    let status = bin()
        .args(["generate", "--geometry", "theta", "--n", "8"])
        .arg("--out")
        .arg(&mesh_path)
        .status()
        .unwrap();
    assert!(status.success());

    let output = bin()
        .arg("validate")
        .arg("--input")
        .arg(&mesh_path)
        .output()
        .unwrap();
    assert!(output.status.success());
    let report = stdout_json(&output);
    assert_eq!(report["ok"], true);
    assert_eq!(report["elements"], 128);
    assert_eq!(report["crack_faces"], 20);
    assert_eq!(report["regions"], 3);
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn validate_rejects_corrupted_input_with_exit_code_two() {
    let dir = workdir("corrupt");
    let good = dir.join("loop.json");
    bin()
        .args(["generate", "--geometry", "loop", "--n", "8"])
        .arg("--out")
        .arg(&good)
        .status()
        .unwrap();

    let text = fs::read_to_string(&good).unwrap();
    let bad_json = dir.join("truncated.json");
    fs::write(&bad_json, &text[..text.len() / 2]).unwrap();
    let output = bin()
        .arg("validate")
        .arg("--input")
        .arg(&bad_json)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let report = stdout_json(&output);
    assert_eq!(report["ok"], false);
    assert_eq!(report["error"]["kind"], "mesh-file");

    let bad_index = dir.join("bad-index.json");
    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["elements"][0][2] = serde_json::json!(100_000);
    fs::write(&bad_index, serde_json::to_string(&doc).unwrap()).unwrap();
    let output = bin()
        .arg("validate")
        .arg("--input")
        .arg(&bad_index)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));

    let missing = bin()
        .arg("validate")
        .arg("--input")
        .arg(dir.join("does-not-exist.json"))
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(1));
    assert_eq!(stdout_json(&missing)["error"]["kind"], "read");
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn interpolate_reports_errors_and_writes_provenance() {
    let dir = workdir("interp");
    let dump_path = dir.join("provenance.json");
    let output = bin()
        .args([
            "interpolate",
            "--geometry",
            "theta",
            "--n",
            "8",
            "--p",
            "2",
            "--function",
            "jumpy-sine",
        ])
        .arg("--out")
        .arg(&dump_path)
        .output()
        .unwrap();
    assert!(output.status.success());
    let report = stdout_json(&output);
    assert_eq!(report["ndofs"], 330);
    assert!(report["jump_error"].as_f64().unwrap() < 1e-12);
    assert!(report["l2_error"].as_f64().unwrap() < 1e-2);
    let ratio = report["stability_ratio"].as_f64().unwrap();
    assert!((ratio - 1.0).abs() < 1e-3);

    let dump: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&dump_path).unwrap()).unwrap();
    assert_eq!(dump["dofs"].as_array().unwrap().len(), 330);
    assert!(!dump["crack_nodes"].as_array().unwrap().is_empty());

    let unknown = bin()
        .args(["interpolate", "--function", "no-such-field"])
        .output()
        .unwrap();
    assert_eq!(unknown.status.code(), Some(1));
    assert_eq!(stdout_json(&unknown)["error"]["kind"], "field");
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn convergence_csv_is_deterministic_and_shows_second_order() {
    let dir = workdir("conv");
    let mut outputs = Vec::new();
    for run in 0..2 {
        let path = dir.join(format!("table-{run}.csv"));
        let status = bin()
            .args([
                "convergence",
                "--geometry",
                "theta",
                "--n",
                "8",
                "--p",
                "1",
                "--levels",
                "3",
                "--function",
                "jumpy-sine",
            ])
            .arg("--out")
            .arg(&path)
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1], "CSV output must be byte-identical");

    let text = String::from_utf8(outputs[0].clone()).unwrap();
    let lines: Vec<&str> = text.trim_end().lines().collect();
    assert_eq!(
        lines[0],
        "level,h,L2_error,H1_error,L2_rate,H1_rate,stability_ratio"
    );
    assert_eq!(lines.len(), 4);
    let last: Vec<&str> = lines[3].split(',').collect();
    let l2_rate: f64 = last[4].parse().unwrap();
    let h1_rate: f64 = last[5].parse().unwrap();
    assert!((1.8..2.2).contains(&l2_rate), "L2 rate {l2_rate}");
    assert!((0.85..1.15).contains(&h1_rate), "H1 rate {h1_rate}");
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn solve_study_reports_exact_indicator_solutions() {
    let output = bin()
        .args([
            "solve",
            "--geometry",
            "loop",
            "--n",
            "8",
            "--p",
            "1",
            "--levels",
            "2",
            "--function",
            "region-indicator",
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    let lines: Vec<&str> = text.trim_end().lines().collect();
    assert_eq!(
        lines[0],
        "level,h,H1_error,H1_rate,iterations,residual,energy"
    );
    assert_eq!(lines.len(), 3);
    for row in &lines[1..] {
        let cells: Vec<&str> = row.split(',').collect();
        let h1_error: f64 = cells[2].parse().unwrap();
        assert!(h1_error < 1e-9, "indicator H1 error {h1_error}");
    }
}
