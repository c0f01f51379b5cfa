use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lltboost"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synthetic(dir: &Path, kind: &str, name: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    let o = run(&[
        "make-synthetic",
        "--kind",
        kind,
        "--n",
        "300",
        "--d",
        "4",
        "--seed",
        "3",
        "--out",
        p(&path),
    ]);
    assert!(o.status.success(), "{o:?}");
    path
}

fn final_train_risk(trace: &Path) -> f64 {
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(trace).unwrap()).unwrap();
    v["stages"].as_array().unwrap().last().unwrap()["train_risk"]
        .as_f64()
        .unwrap()
}

fn predicted_risk(text: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix("risk: "))
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn train_print_predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic(dir.path(), "oblique", "d.csv");
    let model = dir.path().join("m.json");
    let o = run(&[
        "train",
        "--method",
        "lltboost",
        "--data",
        p(&data),
        "--target",
        "y",
        "--task",
        "clf",
        "--rules",
        "3",
        "--seed",
        "7",
        "--out",
        p(&model),
    ]);
    assert!(o.status.success(), "{o:?}");
    let table = stdout(&o);
    assert!(table.starts_with("rules"));
    assert!(table.lines().nth(1).unwrap().trim_start().starts_with('0'));

    let o = run(&["print", "--model", p(&model)]);
    let text = stdout(&o);
    assert!(text.starts_with("score = "));
    let stored: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(
        text.lines().last().unwrap(),
        format!("complexity: {}", stored["complexity"])
    );
    assert_eq!(stored["metadata"]["seed"], 7);

    let o = run(&["predict", "--model", p(&model), "--data", p(&data)]);
    assert!(o.status.success());
    let csv = stdout(&o);
    assert_eq!(csv.lines().count(), 301);
    assert!(csv.starts_with("score,prediction"));
}

#[test]
fn predict_reproduces_the_final_train_risk() {
    let dir = tempfile::tempdir().unwrap();
    for (kind, task) in [("oblique", "clf"), ("staircase", "reg")] {
        let data = synthetic(dir.path(), kind, &format!("{kind}.csv"));
        let model = dir.path().join(format!("{kind}.json"));
        let trace = dir.path().join(format!("{kind}.trace.json"));
        let o = run(&[
            "train",
            "--method",
            "tgb",
            "--data",
            p(&data),
            "--task",
            task,
            "--rules",
            "5",
            "--out",
            p(&model),
            "--trace",
            p(&trace),
        ]);
        assert!(o.status.success(), "{o:?}");
        let o = run(&[
            "predict",
            "--model",
            p(&model),
            "--data",
            p(&data),
            "--out",
            p(&dir.path().join("pred.csv")),
        ]);
        assert!(o.status.success(), "{o:?}");
        let (want, got) = (final_train_risk(&trace), predicted_risk(&stdout(&o)));
        assert!((want - got).abs() <= 1e-12, "{kind}: {want} vs {got}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic(dir.path(), "oblique", "d.csv");

    assert_eq!(
        run(&["train", "--data", p(&data), "--task", "clf", "--bogus"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));

    let missing = dir.path().join("missing.csv");
    assert_eq!(
        run(&["train", "--data", p(&missing), "--task", "clf"])
            .status
            .code(),
        Some(3)
    );

    let config = dir.path().join("bad.json");
    std::fs::write(&config, "{ \"max_rules\": -1 ").unwrap();
    let o = run(&[
        "train",
        "--data",
        p(&data),
        "--task",
        "clf",
        "--config",
        p(&config),
    ]);
    assert_eq!(o.status.code(), Some(5));

    let model = dir.path().join("m.json");
    let o = run(&[
        "train",
        "--method",
        "tgb",
        "--data",
        p(&data),
        "--task",
        "clf",
        "--rules",
        "2",
        "--out",
        p(&model),
    ]);
    assert!(o.status.success());
    let o = run(&[
        "predict",
        "--model",
        p(&model),
        "--data",
        p(&data),
        "--task",
        "reg",
    ]);
    assert_eq!(o.status.code(), Some(3));

    // regression values as class labels
    let reg = synthetic(dir.path(), "staircase", "r.csv");
    assert_eq!(
        run(&["train", "--data", p(&reg), "--task", "clf"])
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn config_values_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic(dir.path(), "oblique", "d.csv");
    let config = dir.path().join("c.json");
    std::fs::write(
        &config,
        r#"{"max_rules": 1, "max_propositions": 1, "seed": 4}"#,
    )
    .unwrap();
    let model = dir.path().join("m.json");
    let o = run(&[
        "train",
        "--data",
        p(&data),
        "--task",
        "clf",
        "--config",
        p(&config),
        "--rules",
        "2",
        "--out",
        p(&model),
    ]);
    assert!(o.status.success(), "{o:?}");
    let stored: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(stored["metadata"]["config"]["max_rules"], 2);
    assert_eq!(stored["metadata"]["config"]["max_propositions"], 1);
    assert_eq!(stored["metadata"]["seed"], 4);
    for rule in stored["rules"].as_array().unwrap() {
        assert_eq!(rule["propositions"].as_array().unwrap().len(), 1);
    }
}

#[test]
fn benchmark_writes_a_report_directory() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic(dir.path(), "oblique", "d.csv");
    let config = dir.path().join("protocol.json");
    std::fs::write(
        &config,
        r#"{"protocol": {"repetitions": 2, "max_rules": 2, "tgb_lambdas": [1.0]},
            "datasets": [{"source": "csv", "path": "d.csv", "target": "y", "task": "classification"},
                         {"source": "synthetic", "kind": "axis-staircase", "n": 120, "d": 3, "noise": 0.1}]}"#,
    )
    .unwrap();
    let out = dir.path().join("report");
    let o = run(&[
        "benchmark",
        "--config",
        p(&config),
        "--jobs",
        "2",
        "--out",
        p(&out),
    ]);
    assert!(o.status.success(), "{o:?}");
    for f in lltboost::eval::REPORT_FILES {
        assert!(out.join(f).exists(), "{f}");
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["datasets"].as_array().unwrap().len(), 2);
    assert_eq!(report["protocol"]["repetitions"], 2);
    assert!(data.exists());
}
