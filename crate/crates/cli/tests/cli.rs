//! End-to-end behavior of the binary: documented examples, determinism,
//! config-file precedence, and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn gfs() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gfs"))
}

fn run(args: &[&str]) -> Output {
    gfs().args(args).output().expect("binary runs")
}

fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "gfs {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn make_dataset(dir: &Path, columns: (&str, &str, &str)) -> String {
    let ds = dir.join("ds").to_str().unwrap().to_string();
    run_ok(&[
        "synth", "--out", &ds, "--nodes", "300", "--communities", "2", "--favored", columns.0,
        "--disfavored", columns.1, "--noise", columns.2, "--p-intra", "0.08", "--p-inter",
        "0.005", "--sigma", "1.0", "--seed", "7",
    ]);
    ds
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn select_takes_three_of_ten_columns_at_ratio_point_three() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = make_dataset(tmp.path(), ("4", "3", "3"));
    let out = tmp.path().join("partition.json");
    run_ok(&["select", &ds, "--ratio", "0.3", "--out", out.to_str().unwrap()]);
    let report = read_json(&out);
    assert_eq!(report["result"]["favored"].as_array().unwrap().len(), 3);
    assert_eq!(report["result"]["disfavored"].as_array().unwrap().len(), 7);
    assert_eq!(report["config"]["ratio"], 0.3);
}

#[test]
fn tfi_reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = make_dataset(tmp.path(), ("3", "3", "2"));
    let a = tmp.path().join("a.json");
    let b = tmp.path().join("b.json");
    let csv_a = tmp.path().join("a.csv");
    let csv_b = tmp.path().join("b.csv");
    run_ok(&[
        "tfi", &ds, "--seed", "3", "--out", a.to_str().unwrap(), "--csv",
        csv_a.to_str().unwrap(),
    ]);
    run_ok(&[
        "tfi", &ds, "--seed", "3", "--out", b.to_str().unwrap(), "--csv",
        csv_b.to_str().unwrap(),
    ]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(std::fs::read(&csv_a).unwrap(), std::fs::read(&csv_b).unwrap());
}

#[test]
fn config_file_sits_between_flags_and_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = make_dataset(tmp.path(), ("3", "3", "2"));
    let cfg = tmp.path().join("run.cfg");
    std::fs::write(&cfg, "ratio=0.25\nseed=5\n").unwrap();

    let from_file = tmp.path().join("file.json");
    run_ok(&[
        "select", &ds, "--config", cfg.to_str().unwrap(), "--out", from_file.to_str().unwrap(),
    ]);
    let report = read_json(&from_file);
    assert_eq!(report["config"]["ratio"], 0.25);
    assert_eq!(report["config"]["seed"], 5);

    let flag_wins = tmp.path().join("flag.json");
    run_ok(&[
        "select", &ds, "--config", cfg.to_str().unwrap(), "--ratio", "0.5", "--out",
        flag_wins.to_str().unwrap(),
    ]);
    assert_eq!(read_json(&flag_wins)["config"]["ratio"], 0.5);
}

#[test]
fn usage_errors_exit_one_with_one_line() {
    let out = run(&["tfi", "somewhere", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(stderr.trim().lines().count(), 1, "{stderr}");
    assert!(stderr.contains("--bogus"), "{stderr}");
}

#[test]
fn data_errors_exit_two_and_name_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = make_dataset(tmp.path(), ("3", "3", "2"));
    let labels = Path::new(&ds).join("labels.csv");
    let mut lines: Vec<String> = std::fs::read_to_string(&labels)
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    lines[4] = "99".into();
    std::fs::write(&labels, lines.join("\n") + "\n").unwrap();

    let out = run(&["tfi", &ds, "--out", tmp.path().join("t.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("labels.csv:5"), "{stderr}");
}

#[test]
fn supervision_fraction_restricts_but_keeps_scores_close() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = make_dataset(tmp.path(), ("3", "3", "2"));
    let full = tmp.path().join("full.json");
    let third = tmp.path().join("third.json");
    run_ok(&["tfi", &ds, "--supervision", "all", "--out", full.to_str().unwrap()]);
    run_ok(&["tfi", &ds, "--supervision", "0.6", "--out", third.to_str().unwrap()]);
    let full = read_json(&full);
    let third = read_json(&third);
    assert_eq!(full["config"]["supervision"], "all");
    assert_eq!(third["config"]["supervision"], "0.6");
    let tfi_full = full["result"]["tfi"].as_array().unwrap();
    let tfi_third = third["result"]["tfi"].as_array().unwrap();
    assert_eq!(tfi_full.len(), tfi_third.len());
    assert_ne!(tfi_full, tfi_third);
}

#[test]
fn train_reports_partition_for_gfs_only() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = make_dataset(tmp.path(), ("3", "3", "2"));
    let gfs_out = tmp.path().join("gfs.json");
    let mlp_out = tmp.path().join("mlp.json");
    run_ok(&[
        "train", &ds, "--model", "gfs", "--epochs", "20", "--hidden", "8", "--out",
        gfs_out.to_str().unwrap(),
    ]);
    run_ok(&[
        "train", &ds, "--model", "mlp", "--epochs", "20", "--hidden", "8", "--out",
        mlp_out.to_str().unwrap(),
    ]);
    let gfs_report = read_json(&gfs_out);
    let mlp_report = read_json(&mlp_out);
    assert!(gfs_report["result"]["favored"].is_array());
    assert!(mlp_report["result"].get("favored").is_none());
    assert_eq!(
        gfs_report["result"]["history"]["train_loss"]
            .as_array()
            .unwrap()
            .len(),
        20
    );
}
