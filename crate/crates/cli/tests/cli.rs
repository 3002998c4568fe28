use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gaze-target"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Small fidelity-1 dataset: 2 participants x 5 targets x 4 trials.
fn dataset(dir: &Path, fidelity: &str, seed: &str) {
    ok(&[
        "simulate",
        "--participants",
        "2",
        "--trials-per-target",
        "4",
        "--fidelity",
        fidelity,
        "--gaze-noise-px",
        "0",
        "--seed",
        seed,
        "--out",
        p(dir),
    ]);
}

#[test]
fn synth_writes_two_identical_files_per_run() {
    let tmp = tempfile::tempdir().unwrap();
    let pool = tmp.path().join("pool");
    ok(&["pool", "--task", "oreilly", "--n-images", "12", "--out", p(&pool)]);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for out in [&a, &b] {
        ok(&["synth", "--pool", p(&pool), "--target", "oreilly_004", "--seed", "9", "--out", p(out)]);
    }
    for f in ["collage.png", "layout.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_eq!(fs::read_dir(&a).unwrap().count(), 2);
}

#[test]
fn synth_missing_pool_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["synth", "--pool", p(&tmp.path().join("nope")), "--target", "x", "--out", p(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope"));
}

#[test]
fn simulate_default_structure_and_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let out = ok(&["simulate", "--seed", "42", "--out", p(&a)]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("600 trials"));
    ok(&["simulate", "--seed", "42", "--out", p(&b)]);
    let ta = fs::read(a.join("trials.jsonl")).unwrap();
    assert_eq!(ta, fs::read(b.join("trials.jsonl")).unwrap());
    assert_eq!(ta.iter().filter(|&&c| c == b'\n').count(), 600);
}

#[test]
fn simulate_rejects_out_of_range_fidelity_by_name() {
    let tmp = tempfile::tempdir().unwrap();
    let params = tmp.path().join("params.json");
    fs::write(&params, r#"{"fidelity": 1.5}"#).unwrap();
    let out = run(&["--json-errors", "simulate", "--params", p(&params), "--out", p(&tmp.path().join("d"))]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.lines().count(), 1);
    let v: serde_json::Value = serde_json::from_str(err.trim()).unwrap();
    assert_eq!(v["error"], "InvalidParameter");
    assert!(v["message"].as_str().unwrap().contains("fidelity"));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let params = tmp.path().join("params.json");
    fs::write(&params, r#"{"fidelty": 0.5}"#).unwrap();
    let out = run(&["simulate", "--params", p(&params), "--out", p(&tmp.path().join("d"))]);
    assert_eq!(out.status.code(), Some(2));
    let ds = tmp.path().join("ds");
    dataset(&ds, "1", "1");
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"m": 21, "window": 3}"#).unwrap();
    let out =
        run(&["eval", "--dataset", p(&ds), "--setting", "closed-within", "--config", p(&cfg), "--out", p(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn eval_closed_within_perfect_and_flags_override_config() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("ds");
    dataset(&ds, "1", "2");
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"m": 41, "k": 20, "seed": 3}"#).unwrap();
    let out = tmp.path().join("ev");
    ok(&[
        "eval",
        "--dataset",
        p(&ds),
        "--setting",
        "closed-within",
        "--config",
        p(&cfg),
        "--m",
        "21",
        "--out",
        p(&out),
    ]);
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["mean_accuracy"], 1.0);
    assert_eq!(report["config"]["m"], 21);
    assert_eq!(report["config"]["k"], 20);
    assert_eq!(report["config"]["seed"], 3);
    let csv = fs::read_to_string(out.join("report.csv")).unwrap();
    assert!(csv.starts_with("task,setting,m,k,sampling,fold,accuracy,chance\n"));
}

#[test]
fn eval_control_reports_closed_chance() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("ds");
    dataset(&ds, "1", "4");
    let out = tmp.path().join("ev");
    ok(&["eval", "--dataset", p(&ds), "--setting", "control", "--m", "21", "--k", "20", "--out", p(&out)]);
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["chance"], 0.2);
    assert_eq!(report["setting"], "control");
}

#[test]
fn eval_open_cross_with_four_targets_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("ds");
    ok(&["simulate", "--participants", "6", "--trials-per-target", "2", "--targets", "4", "--out", p(&ds)]);
    let out = run(&["--json-errors", "eval", "--dataset", p(&ds), "--setting", "open-cross", "--out", p(tmp.path())]);
    assert_eq!(out.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert_eq!(v["error"], "TooFewTargets");
}

#[test]
fn sweep_counts_cells_and_ignores_jobs() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("ds");
    dataset(&ds, "0.8", "5");
    let grid = ["--m-grid", "11,21", "--k-grid", "10,20", "--sampling-grid", "on,off"];
    let mut outputs = Vec::new();
    for jobs in ["1", "3"] {
        let out = tmp.path().join(format!("sw{jobs}"));
        let mut args = vec!["--jobs", jobs, "sweep", "--dataset", p(&ds)];
        args.extend_from_slice(&grid);
        args.extend_from_slice(&["--out", p(&out)]);
        ok(&args);
        outputs.push(out);
    }
    for f in ["cells.csv", "folds.csv", "summary.csv", "sweep.json"] {
        assert_eq!(fs::read(outputs[0].join(f)).unwrap(), fs::read(outputs[1].join(f)).unwrap(), "{f}");
    }
    let cells = fs::read_to_string(outputs[0].join("cells.csv")).unwrap();
    assert_eq!(cells.lines().count(), 1 + 8);
}

#[test]
fn sweep_empty_grid_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("ds");
    dataset(&ds, "0.8", "6");
    let out = run(&["sweep", "--dataset", p(&ds), "--m-grid", "21", "--out", p(&tmp.path().join("sw"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn jobs_env_var_is_a_fallback() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("ds");
    dataset(&ds, "1", "7");
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let args = |out: &Path| {
        ["eval", "--dataset", p(&ds), "--setting", "closed-within", "--m", "21", "--k", "20", "--out", p(out)]
            .map(String::from)
    };
    let st = bin().env("GAZE_TARGET_JOBS", "2").args(args(&a)).status().unwrap();
    assert!(st.success());
    let st = bin().env("GAZE_TARGET_JOBS", "0").args(args(&b)).status().unwrap();
    assert_eq!(st.code(), Some(2));
    ok(&[
        "--jobs",
        "1",
        "eval",
        "--dataset",
        p(&ds),
        "--setting",
        "closed-within",
        "--m",
        "21",
        "--k",
        "20",
        "--out",
        p(&b),
    ]);
    assert_eq!(fs::read(a.join("report.json")).unwrap(), fs::read(b.join("report.json")).unwrap());
}

#[test]
fn train_vocab_and_stats() {
    let tmp = tempfile::tempdir().unwrap();
    let ds = tmp.path().join("ds");
    dataset(&ds, "1", "8");
    let v = tmp.path().join("vocab.json");
    ok(&["train-vocab", "--dataset", p(&ds), "--m", "11", "--k", "7", "--out", p(&v)]);
    let vocab: serde_json::Value = serde_json::from_slice(&fs::read(&v).unwrap()).unwrap();
    assert_eq!(vocab["centroids"].as_array().map(Vec::len), Some(7));

    let out = ok(&["stats", "--dataset", p(&ds), "--participants", "p02"]);
    let stats: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(stats["participants"].as_array().unwrap().len(), 1);
    assert_eq!(stats["participants"][0]["participant"], "p02");
    assert_eq!(stats["task"]["n_trials"], 20);
}
