use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ptm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptm"))
        .args(args)
        .env_remove("PTM_SEED")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn train_xor(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "train",
        "--experiment",
        "xor-ssp",
        "--epochs",
        "20",
        "--train-size",
        "300",
        "--states",
        "20",
        "--seed",
        "4",
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    ptm(&args)
}

#[test]
fn train_writes_model_and_history() {
    let dir = tempfile::tempdir().unwrap();
    let out = train_xor(dir.path(), &[]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let model: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("model.json")).unwrap()).unwrap();
    assert_eq!(model["format_version"], 1);
    assert_eq!(model["machine"]["kind"], "ptm");
    let clauses = model["machine"]["banks"][0]["clauses"].as_array().unwrap();
    assert_eq!(clauses.len(), 4);
    assert!(clauses.iter().all(|c| c["spvs"].as_array().unwrap().len() == 4));
    assert_eq!(model["provenance"]["seed"], 4);
    assert_eq!(model["provenance"]["dataset_digest"].as_str().unwrap().len(), 64);

    let (header, rows) = read_csv(&dir.path().join("history.csv"));
    assert_eq!(header, ["epoch", "updates", "mean_abs_vote", "train_accuracy", "test_accuracy"]);
    assert_eq!(rows.len(), 20);
    assert_eq!(rows[0][0], "1");
}

#[test]
fn identical_runs_give_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(code(&train_xor(a.path(), &[])), 0);
    assert_eq!(code(&train_xor(b.path(), &[])), 0);
    for file in ["model.json", "history.csv"] {
        assert_eq!(
            std::fs::read(a.path().join(file)).unwrap(),
            std::fs::read(b.path().join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_ptm"))
        .args(["train", "--epochs", "1", "--train-size", "50", "--out", dir.path().to_str().unwrap()])
        .env("PTM_SEED", "123")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let model: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("model.json")).unwrap()).unwrap();
    assert_eq!(model["provenance"]["seed"], 123);

    let bad = Command::new(env!("CARGO_BIN_EXE_ptm"))
        .args(["train", "--epochs", "1", "--out", dir.path().to_str().unwrap()])
        .env("PTM_SEED", "abc")
        .output()
        .unwrap();
    assert_eq!(code(&bad), 2);
}

#[test]
fn ssp_dump_rows_and_columns() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&train_xor(dir.path(), &[])), 0);
    let model = dir.path().join("model.json");
    let out = ptm(&["ssp-dump", "--model", model.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let (header, rows) = read_csv(&dir.path().join("ssp.csv"));
    assert_eq!(header.len(), 4 + 40);
    assert_eq!(&header[..5], ["class", "clause", "literal", "include_probability", "s1"]);
    assert_eq!(header.last().unwrap(), "s40");
    // m × 2o rows for a binary machine
    assert_eq!(rows.len(), 4 * 4);
    for row in &rows {
        assert_eq!(row.len(), header.len());
        let include: f64 = row[3].parse().unwrap();
        let upper: f64 = row[4 + 20..].iter().map(|v| v.parse::<f64>().unwrap()).sum();
        assert!((include - upper).abs() < 1e-12);
    }
    let literals: Vec<&str> = rows[..4].iter().map(|r| r[2].as_str()).collect();
    assert_eq!(literals, ["x1", "x2", "¬x1", "¬x2"]);
}

#[test]
fn corrupt_model_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"format_version\": 1, \"machine\": ").unwrap();
    let out = ptm(&["ssp-dump", "--model", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 3);

    assert_eq!(code(&train_xor(dir.path(), &[])), 0);
    let model = dir.path().join("model.json");
    let text = std::fs::read_to_string(&model).unwrap();
    let tampered = text.replacen("\"format_version\": 1", "\"format_version\": 2", 1);
    std::fs::write(&model, tampered).unwrap();
    let out = ptm(&["ssp-dump", "--model", model.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 3);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(code(&ptm(&["train", "--no-such-flag"])), 2);
    assert_eq!(code(&ptm(&["train", "--clauses", "3", "--out", d])), 2);
    assert_eq!(code(&ptm(&["train", "--specificity", "0.5", "--out", d])), 2);
    assert_eq!(code(&ptm(&["iris", "--dataset", "/no/such/iris.csv", "--out", d])), 2);
    assert_eq!(code(&ptm(&["train", "--experiment", "custom", "--out", d])), 2);
    let missing = ptm(&["ssp-dump", "--model", "/no/such/model.json", "--out", d]);
    assert_eq!(code(&missing), 2);
    assert!(!missing.stderr.is_empty());
}

#[test]
fn malformed_dataset_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("data.csv");
    std::fs::write(&csv, "1.0,2.0,a\n1.0,oops,b\n").unwrap();
    let out = ptm(&["train", "--experiment", "custom", "--dataset", csv.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 2"));
}

#[test]
fn surface_grid_and_ranges() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = ptm(&[
        "train", "--experiment", "synthetic-2d", "--epochs", "5", "--train-size", "200", "--seed", "2", "--out", d,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let model = dir.path().join("model.json");
    let out = ptm(&[
        "surface", "--model", model.to_str().unwrap(), "--resolution", "7", "--samples", "10", "--x-range", "-6,6",
        "--out", d,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_csv(&dir.path().join("surface.csv"));
    assert_eq!(header, ["x1", "x2", "mean", "entropy", "std", "mi"]);
    assert_eq!(rows.len(), 49);
    assert_eq!(rows[0][0], "-6.0");
    for r in &rows {
        let h: f64 = r[3].parse().unwrap();
        assert!((0.0..=1.0).contains(&h));
    }

    // XOR models have no binarizer, and a bad range is a usage error.
    let xor = tempfile::tempdir().unwrap();
    assert_eq!(code(&train_xor(xor.path(), &[])), 0);
    let xor_model = xor.path().join("model.json");
    let out = ptm(&["surface", "--model", xor_model.to_str().unwrap(), "--out", d]);
    assert_eq!(code(&out), 2);
    let out = ptm(&["surface", "--model", model.to_str().unwrap(), "--x-range", "3,1", "--out", d]);
    assert_eq!(code(&out), 2);
}

#[test]
fn surface_requires_two_classes() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("three.csv");
    let mut text = String::from("a,b,label\n");
    for i in 0..30 {
        text.push_str(&format!("{},{},{}\n", i as f64 * 0.1, (i % 7) as f64, i % 3));
    }
    std::fs::write(&csv, text).unwrap();
    let d = dir.path().to_str().unwrap();
    let out = ptm(&[
        "train", "--experiment", "custom", "--dataset", csv.to_str().unwrap(), "--epochs", "2", "--bits", "3", "--out", d,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let model = dir.path().join("model.json");
    let out = ptm(&["surface", "--model", model.to_str().unwrap(), "--x-range", "0,1", "--y-range", "0,1", "--out", d]);
    assert_eq!(code(&out), 2);
}

fn write_truth_table(path: &Path) {
    std::fs::write(path, "x1,x2,y\n0,0,0\n0,1,1\n1,0,1\n1,1,0\n").unwrap();
}

#[test]
fn eval_classic_xor_and_single_sample() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = ptm(&[
        "train", "--experiment", "xor-ssp", "--mode", "classic", "--noise", "0", "--epochs", "200", "--train-size",
        "1000", "--seed", "1", "--out", d,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let truth = dir.path().join("truth.csv");
    write_truth_table(&truth);
    let model = dir.path().join("model.json");
    let out = ptm(&[
        "eval", "--model", model.to_str().unwrap(), "--dataset", truth.to_str().unwrap(), "--samples", "1", "--out", d,
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("eval.json")).unwrap()).unwrap();
    assert_eq!(summary["accuracy"], 1.0);
    assert_eq!(summary["examples"], 4);
    let (header, rows) = read_csv(&dir.path().join("eval_predictions.csv"));
    assert_eq!(
        header,
        ["index", "true_label", "predicted", "correct", "confidence", "entropy", "mutual_information"]
    );
    assert!(rows.iter().all(|r| r[6] == "0.0"));
}

#[test]
fn eval_rejects_width_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&train_xor(dir.path(), &[])), 0);
    let wide = dir.path().join("wide.csv");
    std::fs::write(&wide, "0,0,1,0\n1,1,0,1\n").unwrap();
    let model = dir.path().join("model.json");
    let out = ptm(&[
        "eval", "--model", model.to_str().unwrap(), "--dataset", wide.to_str().unwrap(), "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn iris_outputs_all_keys() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = ptm(&["iris", "--epochs", "2", "--clauses", "10", "--samples", "5", "--seed", "3", "--out", d]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let metrics: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("iris_metrics.json")).unwrap()).unwrap();
    for key in [
        "seed",
        "train_rows",
        "test_rows",
        "examples",
        "samples",
        "bins",
        "accuracy",
        "ece",
        "mean_entropy",
        "mean_mutual_information",
        "mean_std",
        "mean_entropy_correct",
        "mean_entropy_incorrect",
        "mean_mi_correct",
        "mean_mi_incorrect",
        "reliability",
    ] {
        assert!(metrics.get(key).is_some(), "missing {key}");
    }
    assert_eq!(metrics["test_rows"], 30);
    assert_eq!(metrics["reliability"].as_array().unwrap().len(), 10);
    let (_, rows) = read_csv(&dir.path().join("iris_predictions.csv"));
    assert_eq!(rows.len(), 30);
    assert!(rows.iter().all(|r| r[1].starts_with("Iris-")));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    std::fs::write(&config, r#"{"experiment": "xor-ssp", "epochs": 3, "train_size": 100, "seed": 8}"#).unwrap();
    let d = dir.path().to_str().unwrap();
    let out = ptm(&["train", "--config", config.to_str().unwrap(), "--epochs", "2", "--out", d]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (_, rows) = read_csv(&dir.path().join("history.csv"));
    assert_eq!(rows.len(), 2);
    let model: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("model.json")).unwrap()).unwrap();
    assert_eq!(model["provenance"]["seed"], 8);
}
