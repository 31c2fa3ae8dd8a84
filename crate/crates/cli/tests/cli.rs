use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn repint(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_repint")).args(args).output().expect("spawn repint")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines().map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect()
}

/// Final `cesaro_distance` of a trajectory CSV.
fn final_cesaro(text: &str) -> f64 {
    let last = text.lines().last().unwrap();
    last.split(',').nth(2).unwrap().parse().unwrap()
}

#[test]
fn check_channel_pauli_fixture() {
    let v = json_of(&repint(&["check-channel", "--fixture", "pauli"]));
    assert_eq!(v["in_class_C"], false);
    assert_eq!(v["irreducible"], true);
    assert_eq!(v["kraus_count"], 2);
    assert_eq!(v["spectral"]["multiplicity_of_one"], 1);
    assert_eq!(v["spectral"]["peripheral"].as_array().unwrap().len(), 2);
}

#[test]
fn check_channel_identity_and_random() {
    let v = json_of(&repint(&["check-channel", "--fixture", "identity", "--d", "2"]));
    assert_eq!(v["spectral"]["multiplicity_of_one"], 4);
    assert_eq!(v["irreducible"], false);

    let v = json_of(&repint(&["check-channel", "--d", "2", "--d-prime", "2", "--b", "1,0", "--seed", "42"]));
    assert_eq!(v["in_class_C"], true);
    assert_eq!(v["config"]["seed"], 42);
}

#[test]
fn check_channel_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ch.json");
    let w = std::f64::consts::FRAC_1_SQRT_2;
    let text = format!(
        r#"{{"d": 2, "operators": [[[0,0],[{w},0],[{w},0],[0,0]], [[{w},0],[0,0],[0,0],[-{w},0]]]}}"#
    );
    std::fs::write(&path, text).unwrap();
    let v = json_of(&repint(&["check-channel", "--channel-file", path.to_str().unwrap()]));
    assert_eq!(v["in_class_C"], false);
    assert_eq!(v["irreducible"], true);
}

#[test]
fn configuration_errors_exit_2() {
    let cases: &[&[&str]] = &[
        &["check-channel", "--d", "2", "--b", "1/4,3/4"],
        &["check-channel", "--d", "2", "--b", "0.6,0.3"],
        &["check-channel", "--d", "2", "--d-prime", "3", "--b", "1,0"],
        &["check-channel", "--channel-file", "/nonexistent/ch.json"],
        &["sample", "--ensemble", "asymptotic", "--d", "2"],
        &["simulate", "--scheme", "fixed", "--fixture", "pauli", "--every", "0"],
        &["selftest", "--only", "no-such-criterion"],
    ];
    for args in cases {
        let out = repint(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn malformed_config_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(&path, r#"{"seed": 1, "unknown_key": true}"#).unwrap();
    let out = repint(&["--config", path.to_str().unwrap(), "check-channel", "--fixture", "pauli"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn selftest_exit_codes() {
    let out = repint(&["selftest", "--only", "pauli"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("[PASS]"));
    // seed 2 is a known false alarm of the 56-entry moment check
    let out = repint(&["selftest", "--only", "haar-moments", "--seed", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("[FAIL]"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"seed": 7, "d": 2, "b": [1.0, 0.0], "n_samples": 16}"#).unwrap();
    let c = cfg.to_str().unwrap();

    let from_file = json_of(&repint(&["--config", c, "check-channel"]));
    let from_flags = json_of(&repint(&["check-channel", "--seed", "7", "--d", "2", "--b", "1,0", "--n-samples", "16"]));
    assert_eq!(from_file["spectral"], from_flags["spectral"]);
    assert_eq!(from_file["config"]["seed"], 7);

    let overridden = json_of(&repint(&["--config", c, "--seed", "8", "check-channel"]));
    assert_eq!(overridden["config"]["seed"], 8);
    assert_eq!(overridden["config"]["n_samples"], 16);
    assert_ne!(overridden["spectral"], from_file["spectral"]);

    // the echoed config reproduces the run
    let echoed = dir.path().join("echo.json");
    std::fs::write(&echoed, overridden["config"].to_string()).unwrap();
    let again = json_of(&repint(&["--config", echoed.to_str().unwrap(), "check-channel"]));
    assert_eq!(again["spectral"], overridden["spectral"]);
}

#[test]
fn sample_output_is_independent_of_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (path, jobs) in [(&a, "1"), (&b, "4")] {
        let out = repint(&[
            "sample", "--ensemble", "asymptotic", "--d", "3", "--b", "3/4,1/8,1/8", "--n-samples", "64", "--seed", "3",
            "--jobs", jobs, "--out", path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let rows = csv_rows(std::str::from_utf8(&ta).unwrap());
    assert_eq!(rows.len(), 64);
    for row in &rows {
        assert_eq!(row.len(), 3);
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(row.windows(2).all(|w| w[0] <= w[1]));
    }

    let manifest = read_json(&dir.path().join("a.manifest.json"));
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["count"], 64);
    assert_eq!(manifest["spec"]["ensemble"], "asymptotic");
    assert_eq!(manifest["config"]["jobs"], 1);
}

#[test]
fn uniform_environment_gives_constant_rows() {
    let out = repint(&["sample", "--ensemble", "asymptotic", "--d", "2", "--b", "1/2,1/2", "--n-samples", "10"]);
    assert!(out.status.success());
    for row in csv_rows(&stdout(&out)) {
        assert!(row.iter().all(|x| (x - 0.5).abs() < 1e-9), "{row:?}");
    }
}

#[test]
fn induced_with_trivial_environment_is_pure() {
    let out = repint(&["sample", "--ensemble", "induced", "--d", "3", "--d-prime", "1", "--n-samples", "10"]);
    assert!(out.status.success());
    for row in csv_rows(&stdout(&out)) {
        assert!(row[0].abs() < 1e-12 && row[1].abs() < 1e-12 && (row[2] - 1.0).abs() < 1e-12, "{row:?}");
    }
}

#[test]
fn figure_sets_write_nine_batches() {
    let dir = tempfile::tempdir().unwrap();
    let out = repint(&["sample", "--figure-sets", "--n-samples", "20", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut csvs: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    csvs.sort();
    assert_eq!(csvs.len(), 9);
    for csv in &csvs {
        let rows = csv_rows(&std::fs::read_to_string(csv).unwrap());
        assert_eq!(rows.len(), 20);
        assert!(csv.with_extension("manifest.json").exists());
    }
}

#[test]
fn simulate_fixed_pauli_oscillates() {
    let out = repint(&["simulate", "--scheme", "fixed", "--fixture", "pauli", "--rho0", "plus-y", "--n-steps", "64"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("step,distance_to_target,cesaro_distance"));
    for line in lines {
        let d: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((d - 1.0).abs() < 1e-9);
    }
}

#[test]
fn simulate_random_env_and_iid_unitary_converge() {
    let dir = tempfile::tempdir().unwrap();
    let runs: &[&[&str]] = &[
        &["simulate", "--scheme", "random-env", "--d", "2", "--d-prime", "2", "--env-law", "induced"],
        &["simulate", "--scheme", "iid-unitary", "--d", "2", "--b", "1,0"],
        &["simulate", "--scheme", "iid-unitary", "--d", "2", "--d-prime", "2", "--env-law", "periodic"],
    ];
    for (i, args) in runs.iter().enumerate() {
        let path = dir.path().join(format!("run{i}.csv"));
        let mut full = args.to_vec();
        full.extend(["--n-steps", "10000", "--seed", "5", "--out", path.to_str().unwrap()]);
        let out = repint(&full);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        let dist = final_cesaro(&std::fs::read_to_string(&path).unwrap());
        assert!(dist <= 0.05, "{args:?}: {dist}");
        let manifest = read_json(&path.with_extension("manifest.json"));
        assert_eq!(manifest["n_steps"], 10000);
        assert_eq!(manifest["seed"], 5);
    }
}

#[test]
fn simulate_is_reproducible() {
    let args = ["simulate", "--scheme", "random-env", "--d", "2", "--b", "1,0", "--n-steps", "500", "--seed", "9"];
    assert_eq!(stdout(&repint(&args)), stdout(&repint(&args)));
}
