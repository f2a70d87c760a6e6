use std::path::Path;
use std::process::{Command, Output};

fn emotion(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_emotion")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Writes the synthetic corpus and trims its config to cheap cells.
fn synth(dir: &Path, extra: serde_json::Value) -> std::path::PathBuf {
    let o = emotion(&["synth", "--out", dir.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let path = dir.join("config.json");
    let mut cfg: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    cfg["representations"] = serde_json::json!([{"kind": "tfidf"}, {"kind": "precomputed", "path": "embeddings/{lang}/{split}.csv", "name": "sentence"}]);
    cfg["classifiers"] = serde_json::json!([{"kind": "dt"}, {"kind": "knn", "k": 5}]);
    cfg.as_object_mut().unwrap().remove("mlp_grid");
    for (k, v) in extra.as_object().unwrap() {
        cfg[k] = v.clone();
    }
    std::fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    path
}

#[test]
fn run_writes_reports_and_saved_models_predict() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synth(dir.path(), serde_json::json!({"save_models": true}));
    let o = emotion(&["run", "--config", cfg.to_str().unwrap(), "--workers", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("8 of 8 cells succeeded"));
    let out = dir.path().join("out");
    for f in ["report.csv", "table2.csv", "table5.csv", "report.txt"] {
        assert!(out.join(f).exists(), "{f}");
    }

    let model = out.join("models/syn.tfidf.dt.pca.bin");
    let input = dir.path().join("data/syn/test.csv");
    let pred = dir.path().join("pred.csv");
    let o = emotion(&[
        "predict",
        "--model",
        model.to_str().unwrap(),
        "--input",
        input.to_str().unwrap(),
        "--output",
        pred.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&pred).unwrap();
    assert!(text.starts_with("id,anger,disgust,fear,joy,sadness,surprise\n"));
    assert_eq!(text.lines().count(), 101);
    assert_eq!(text, std::fs::read_to_string(out.join("predictions/syn.tfidf.dt.pca.csv")).unwrap());

    let o = emotion(&["inspect", "--model", model.to_str().unwrap()]);
    assert!(stdout(&o).contains("representation: tf-idf"));
}

#[test]
fn ablate_prints_paired_rows_and_seed_override_applies() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synth(dir.path(), serde_json::json!({"pca": [false]}));
    let out = dir.path().join("ablation");
    let o = emotion(&["ablate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("w/o PCA") && text.contains("delta"));
    assert_eq!(text.lines().filter(|l| l.starts_with("syn ")).count(), 4);
    assert!(out.join("ablation.csv").exists());
}

#[test]
fn partial_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = synth(dir.path(), serde_json::json!({"pca": [false]}));
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&cfg).unwrap()).unwrap();
    v["classifiers"].as_array_mut().unwrap().push(serde_json::json!({"kind": "knn", "k": 100000, "label": "huge"}));
    std::fs::write(&cfg, v.to_string()).unwrap();
    let o = emotion(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("2 of 6 cells failed"));
}

#[test]
fn bad_configs_exit_with_one_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"data_dir": ".", "languages": ["x"], "representations": [{"kind": "tfidf"}], "classifiers": [{"kind": "knn", "k": "three"}]}"#).unwrap();
    let o = emotion(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("classifiers"));

    let o = emotion(&["run", "--config", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn inspect_config_reports_corpus_statistics() {
    let dir = tempfile::tempdir().unwrap();
    emotion(&["synth", "--out", dir.path().to_str().unwrap()]);
    let o = emotion(&["inspect", "--config", dir.path().join("config.json").to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("train: 400 documents"));
    assert!(text.contains("0 of"), "no OOV in generated vectors: {text}");
    assert!(text.contains("18 cells"));
}
