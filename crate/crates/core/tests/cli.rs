use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("data").join(name)
}

fn miss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_miss"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn iris() -> String {
    data("iris.csv").to_string_lossy().into_owned()
}

#[test]
fn unknown_label_is_a_usage_error() {
    let out = miss(&["train", "--data", &iris(), "--label", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("nope"));
}

#[test]
fn single_fold_is_rejected() {
    let out = miss(&["cv", "--data", &iris(), "--label", "species", "--folds", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_file_fails() {
    let out = miss(&["train", "--data", "/definitely/not/here.csv", "--label", "y"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn train_predict_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    let model_s = model.to_str().unwrap();
    let out = miss(&[
        "train", "--data", &iris(), "--label", "species", "--node-limit", "30",
        "--max-size", "3", "--out", model_s,
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let err = text(&out.stderr);
    assert!(err.contains("objective=") && err.contains("gap="), "{err}");
    assert!(text(&out.stdout).contains("Score:"));

    let pred = miss(&["predict", "--model", model_s, "--data", &iris(), "--proba"]);
    assert_eq!(pred.status.code(), Some(0), "{}", text(&pred.stderr));
    let body = text(&pred.stdout);
    let mut lines = body.lines();
    assert_eq!(
        lines.next().unwrap(),
        "prediction,p_setosa,p_versicolor,p_virginica"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 150);
    for row in rows {
        let p: f64 = row.split(',').skip(1).map(|v| v.parse::<f64>().unwrap()).sum();
        assert!((p - 1.0).abs() < 1e-9, "{row}");
    }

    let eval = miss(&["evaluate", "--model", model_s, "--data", &iris(), "--format", "json"]);
    assert_eq!(eval.status.code(), Some(0), "{}", text(&eval.stderr));
    let v: serde_json::Value = serde_json::from_slice(&eval.stdout).unwrap();
    assert!(v["f1"].as_f64().unwrap() > 0.5);
}

#[test]
fn predict_on_header_only_file_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("empty.csv");
    let model = data("iris_example_model.json");
    // The example model has no binarizer, so columns are its feature names.
    std::fs::write(
        &csv,
        "sepal_length < 5.4,4.8 <= petal_length,0.8 <= petal_width < 1.75\n",
    )
    .unwrap();
    let out = miss(&[
        "predict",
        "--model",
        model.to_str().unwrap(),
        "--data",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(text(&out.stdout).lines().skip(1).next().is_none());
}

#[test]
fn export_renders_the_example_scorecard() {
    let model = data("iris_example_model.json");
    let out = miss(&["export", "--model", model.to_str().unwrap(), "--format", "markdown"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let table = text(&out.stdout);
    assert!(table.contains("4.8 <= petal_length"));
    assert!(table.contains("setosa"));
}

#[test]
fn cv_json_has_one_entry_per_fold() {
    let out = miss(&[
        "cv", "--data", &iris(), "--label", "species", "--folds", "3", "--node-limit", "10",
        "--format", "json",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["folds"].as_array().unwrap().len(), 3);
    assert!(v["summary"]["auc"]["mean"].as_f64().unwrap() > 0.5);
}
