//! End-to-end checks of the `unbopt` binary: exit codes, output files,
//! stdout reports, and byte-level determinism of the emitted series.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::tempdir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_unbopt"))
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

#[test]
fn run_is_deterministic_and_writes_outputs() {
    let scratch = tempdir().unwrap();
    let config = configs_dir().join("fig1_geometric.json");

    let mut csvs = Vec::new();
    for sub in ["first", "second"] {
        let out_dir = scratch.path().join(sub);
        let out = bin()
            .arg("run")
            .arg(&config)
            .arg("--out")
            .arg(&out_dir)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

        let summary = stdout_json(&out);
        assert_eq!(summary["verdict"], "UNBOUNDED");
        assert!(summary["trigger_index"].as_u64().unwrap() <= 20);
        assert!(summary["max_bound_slack"].as_f64().unwrap() <= 0.0);

        // The summary file mirrors the stdout report.
        let on_disk: Value = serde_json::from_str(
            &fs::read_to_string(out_dir.join("fig1_geometric.summary.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(on_disk["verdict"], summary["verdict"]);
        assert_eq!(on_disk["trigger_index"], summary["trigger_index"]);

        csvs.push(fs::read(out_dir.join("fig1_geometric.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1], "repeated runs must emit identical bytes");
}

#[test]
fn run_rejects_malformed_configs_without_writing() {
    let scratch = tempdir().unwrap();
    let config = scratch.path().join("broken.json");
    fs::write(&config, r#"{"problem": 3}"#).unwrap();
    let out_dir = scratch.path().join("out");

    let out = bin()
        .arg("run")
        .arg(&config)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("broken.json"),
        "error should name the offending file: {stderr}"
    );
    assert!(!out_dir.exists(), "a rejected config must not produce outputs");
}

/// A run whose declared curvature constant is far below the true one: its
/// first displacement certificate already violates the claimed decay bound.
fn wrong_smoothness_config() -> String {
    r#"{
        "problem": {
            "type": "geometric",
            "c": [1.0, 1.0, 1.0, 1.0],
            "omega": [[3.0, 0.0], [0.0, 1.0], [1.0, 2.0], [3.0, 3.0]]
        },
        "algorithm": "nag",
        "schedule": { "kind": "polynomial" },
        "x0": [0.0, 0.0],
        "k_max": 200,
        "inf_g": 0.32508297339144826,
        "l_override": 0.3,
        "outputs": { "csv": "wrong_l.csv" },
        "assert_bounds": false
    }"#
    .to_string()
}

#[test]
fn assert_flag_turns_violations_into_exit_two() {
    let scratch = tempdir().unwrap();
    let config = scratch.path().join("wrong_l.json");
    fs::write(&config, wrong_smoothness_config()).unwrap();

    // Without the flag the run merely reports its (positive) worst slack.
    let lenient_dir = scratch.path().join("lenient");
    let out = bin()
        .arg("run")
        .arg(&config)
        .arg("--out")
        .arg(&lenient_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout_json(&out)["max_bound_slack"].as_f64().unwrap() > 0.0);

    // With it, the violation is fatal — but the series is still written
    // first so the failure can be inspected.
    let strict_dir = scratch.path().join("strict");
    let out = bin()
        .arg("run")
        .arg(&config)
        .arg("--out")
        .arg(&strict_dir)
        .arg("--assert-bounds")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("bound"), "stderr should explain: {stderr}");
    assert!(strict_dir.join("wrong_l.csv").exists());
}

#[test]
fn certify_decides_the_bundled_problems() {
    let problems = configs_dir().join("problems");

    let out = bin()
        .arg("certify")
        .arg(problems.join("geometric.json"))
        .arg("--budget")
        .arg("100")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_eq!(report["verdict"], "UNBOUNDED");
    assert_eq!(report["witness_kind"], "q");
    assert!(report["trigger_index"].as_u64().unwrap() <= 20);

    let out = bin()
        .arg("certify")
        .arg(problems.join("ellipsoid.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_eq!(report["verdict"], "UNBOUNDED");
    assert!(report["trigger_index"].as_u64().unwrap() <= 5);

    let out = bin()
        .arg("certify")
        .arg(problems.join("bounded_square.json"))
        .arg("--budget")
        .arg("2000")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["verdict"], "INCONCLUSIVE");
}

#[test]
fn certify_requires_a_conjugate_ceiling() {
    let scratch = tempdir().unwrap();
    let problem = scratch.path().join("no_ceiling.json");
    fs::write(&problem, r#"{"type": "onedim_tight", "alpha": 0.5}"#).unwrap();

    let out = bin().arg("certify").arg(&problem).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("conjugate"),
        "stderr should name the missing ingredient: {stderr}"
    );
}

#[test]
fn sweep_of_bundled_configs_passes() {
    let out = bin()
        .arg("sweep")
        .arg(configs_dir().join("sweep"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = stdout_json(&out);
    assert_eq!(report["total"], 8);
    assert_eq!(report["passed"], 8);
    assert_eq!(report["failed"], 0);
}

#[test]
fn sweep_aggregates_failures_and_redirects_outputs() {
    let scratch = tempdir().unwrap();
    let dir = scratch.path().join("configs");
    fs::create_dir(&dir).unwrap();

    fs::write(
        dir.join("a_good.json"),
        r#"{
            "problem": {
                "type": "geometric",
                "c": [1.0, 1.0, 1.0, 1.0],
                "omega": [[3.0, 0.0], [0.0, 1.0], [1.0, 2.0], [3.0, 3.0]]
            },
            "algorithm": "nag",
            "x0": [0.0, 0.0],
            "k_max": 200,
            "inf_g": 0.32508297339144826,
            "outputs": { "csv": "good.csv" },
            "assert_bounds": true
        }"#,
    )
    .unwrap();
    fs::write(dir.join("b_wrong_l.json"), {
        // Same run but with assertion baked into the config.
        wrong_smoothness_config().replace(r#""assert_bounds": false"#, r#""assert_bounds": true"#)
    })
    .unwrap();
    fs::write(dir.join("notes.txt"), "not a config").unwrap();

    let out_dir = scratch.path().join("series");
    let out = bin()
        .arg("sweep")
        .arg(&dir)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let report = stdout_json(&out);
    assert_eq!(report["total"], 2);
    assert_eq!(report["passed"], 1);
    assert_eq!(report["failed"], 1);
    assert_eq!(report["runs"][0]["config"], "a_good.json");
    assert_eq!(report["runs"][0]["status"], "pass");
    assert_eq!(report["runs"][1]["config"], "b_wrong_l.json");
    assert_eq!(report["runs"][1]["status"], "bound_violation");

    // Both runs' series land under the redirection directory.
    assert!(out_dir.join("good.csv").exists());
    assert!(out_dir.join("wrong_l.csv").exists());

    // An empty directory is a successful no-op sweep.
    let empty = scratch.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let out = bin().arg("sweep").arg(&empty).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["total"], 0);
}
