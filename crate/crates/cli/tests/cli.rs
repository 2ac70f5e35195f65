use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlfisher")).args(args).output().unwrap()
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn kernel_info_reports_moments() {
    let v = json(&["kernel-info", "--kernel", "tophat:a=1"]);
    assert!((v["m2"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn divergent_second_moment_exits_2() {
    let out = run(&["kernel-info", "--kernel", "powertail:p=2.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("second moment"));
}

#[test]
fn gaussian_transform_csv_is_positive() {
    let out = run(&["kernel-info", "--kernel", "gaussian:sigma=1", "--fourier", "0:10:100"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,re,im"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 100);
    assert!(rows.iter().all(|r| r[1] > 0.0));
}

#[test]
fn malformed_inputs_exit_2() {
    for args in [
        &["kernel-info", "--kernel", "tophat:width=1"][..],
        &["thresholds", "--kernel", "tophat:a=1", "--mu", "-1"],
        &["simulate", "--reaction", "local-fisher", "--mu", "1", "--dt", "1"],
        &["sweep", "--kernel", "tophat:a=1", "--mu", "", "--c", "1"],
    ] {
        assert_eq!(run(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn blow_up_exits_3_and_keeps_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "simulate",
        "--kernel",
        "tophat:a=1",
        "--mu",
        "1",
        "--t-final",
        "1",
        "--blowup-threshold",
        "0.5",
        "--output-dir",
        path(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["stop_reason"], "blow_up");
}

#[test]
fn config_echo_reproduces_run_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let (first, second) = (dir.path().join("first"), dir.path().join("second"));
    json(&[
        "wave",
        "--kernel",
        "gaussian:sigma=1",
        "--mu",
        "1",
        "--c",
        "1.5",
        "--c-units",
        "cstar",
        "--half-length",
        "40",
        "--points",
        "1024",
        "--output-dir",
        path(&first),
    ]);
    json(&["wave", "--config", path(&first.join("config.json")), "--output-dir", path(&second)]);
    for file in ["profile.csv", "summary.csv", "report.json"] {
        let a = std::fs::read(first.join(file)).unwrap();
        let b = std::fs::read(second.join(file)).unwrap();
        assert!(a == b, "{file} differs");
    }
    let echo: Value = serde_json::from_slice(&std::fs::read(first.join("config.json")).unwrap()).unwrap();
    let again: Value = serde_json::from_slice(&std::fs::read(second.join("config.json")).unwrap()).unwrap();
    assert_eq!(echo["c"], again["c"]);
    assert_eq!(echo["dt"], again["dt"]);
}

#[test]
fn rapid_wave_has_flat_edges() {
    let dir = tempfile::tempdir().unwrap();
    let report = json(&[
        "wave",
        "--kernel",
        "tophat:a=1",
        "--mu",
        "1",
        "--c",
        "2",
        "--c-units",
        "cstar",
        "--output-dir",
        path(dir.path()),
    ]);
    assert_eq!(report["converged"], true);
    assert_eq!(report["condition_8"], true);
    assert_eq!(report["left_state"]["state"], "one");
    assert!(report["edge_slope_left"].as_f64().unwrap() < 1e-4);
    assert!(report["edge_slope_right"].as_f64().unwrap() < 1e-4);
    assert!(report["sup_norm"].as_f64().unwrap() <= report["thresholds"]["k0"].as_f64().unwrap() + 1e-2);
}

#[test]
fn sweep_writes_one_sorted_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let summary = json(&[
        "sweep",
        "--kernel",
        "tophat:a=1",
        "--mu",
        "2,0.5,1",
        "--c",
        "3,1.5,2",
        "--jobs",
        "2",
        "--output-dir",
        path(dir.path()),
    ]);
    assert_eq!(summary["rows"], 9);
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    assert_eq!(rows.len(), 9);
    let keys: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r[col("mu")].parse().unwrap(), r[col("c_input")].parse().unwrap()))
        .collect();
    let mut sorted = keys.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(keys, sorted);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[col("index")], i.to_string());
        assert!(Path::new(&r[col("dir")]).join("report.json").exists());
    }
}

#[test]
fn sweep_reads_ranges_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.json");
    std::fs::write(
        &cfg,
        r#"{"kernel": "laplace:b=1", "mu": [1], "c": "1.5:2.5:2", "t-final": 50}"#,
    )
    .unwrap();
    let summary = json(&["sweep", "--config", path(&cfg), "--output-dir", path(&dir.path().join("out"))]);
    assert_eq!(summary["rows"], 2);
}

#[test]
fn audit_recomputes_energy_residual() {
    let dir = tempfile::tempdir().unwrap();
    let report = json(&[
        "wave",
        "--kernel",
        "tophat:a=1",
        "--mu",
        "5",
        "--c",
        "2",
        "--c-units",
        "cstar",
        "--output-dir",
        path(dir.path()),
    ]);
    let c = report["frame_speed"].as_f64().unwrap().to_string();
    let audit = json(&[
        "audit",
        "--profile",
        path(&dir.path().join("profile.csv")),
        "--kernel",
        "tophat:a=1",
        "--mu",
        "5",
        "--c",
        &c,
    ]);
    let residual = audit["energy_residual"].as_f64().unwrap();
    assert!(residual < 1e-3, "{residual}");
}
