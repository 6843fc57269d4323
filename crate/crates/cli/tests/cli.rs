use std::path::Path;
use std::process::{Command, Output};

fn adacomp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adacomp"))
        .current_dir(dir)
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = adacomp(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn end_to_end_on_a_synthetic_corpus() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(dir, &["make-corpus", "--out", "c", "--seed", "11", "--size", "100"]);
    for split in ["train", "test"] {
        let examples = format!("c/{split}_examples.jsonl");
        let out = format!("{split}.jsonl");
        ok(
            dir,
            &["annotate", "--examples", &examples, "--retrievals", "c/retrievals.jsonl", "--generator-config", "c/mock.json", "--out", &out],
        );
    }
    let train = ok(
        dir,
        &[
            "train-predictor", "--triplets", "train.jsonl", "--examples", "c/train_examples.jsonl", "--retrievals",
            "c/retrievals.jsonl", "--out", "model.json", "--epochs", "40", "--report", "train.json",
        ],
    );
    assert!(train.contains("loss 1.7918"), "{train}");
    let eval = ok(
        dir,
        &[
            "eval-predictor", "--model", "model.json", "--triplets", "test.jsonl", "--examples", "c/test_examples.jsonl",
            "--retrievals", "c/retrievals.jsonl", "--report", "pred.json", "--confusion-dir", "conf",
        ],
    );
    assert!(eval.contains("true\\pred"));
    assert!(dir.join("conf/confusion.csv").is_file());

    std::fs::write(
        dir.join("run.json"),
        r#"{
  "datasets": {"examples": "c/test_examples.jsonl", "retrievals": "c/retrievals.jsonl", "triplets": "test.jsonl"},
  "generator": {"kind": "mock_file", "path": "c/mock.json"},
  "judge": "em",
  "predictors": [{"kind": "fixed", "name": "top1", "k": 1}, {"kind": "model", "name": "ada", "path": "model.json"}],
  "methods": [
    {"kind": "predictor", "name": "Top-1", "predictor": "top1"},
    {"kind": "predictor", "name": "AdaComp", "predictor": "ada"},
    {"kind": "oracle", "name": "Oracle"}
  ],
  "output_dir": "out"
}"#,
    )
    .unwrap();
    let table = ok(dir, &["run", "--config", "run.json"]);
    assert!(table.starts_with("method,"), "{table}");
    for f in ["table.csv", "report.json", "results.jsonl", "manifest.json"] {
        assert!(dir.join("out").join(f).is_file(), "{f}");
    }
    let sweep = ok(dir, &["sweep", "--config", "run.json"]);
    assert!(sweep.starts_with("k,n,em,f1,tokens\n0,"), "{sweep}");
    ok(dir, &["report", "--predictor-report", "pred.json", "--out", "rep"]);
    assert_eq!(
        std::fs::read_to_string(dir.join("rep/confusion.txt")).unwrap(),
        std::fs::read_to_string(dir.join("conf/confusion.txt")).unwrap()
    );
}

#[test]
fn unreachable_generator_aborts_with_a_partial_file() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(dir, &["make-corpus", "--out", "c", "--size", "10"]);
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    std::fs::write(
        dir.join("http.json"),
        format!(r#"{{"endpoint_url": "http://127.0.0.1:{port}/v1", "model_name": "m", "max_retries": 0, "timeout_ms": 500}}"#),
    )
    .unwrap();
    let out = adacomp(
        dir,
        &[
            "annotate", "--examples", "c/examples.jsonl", "--retrievals", "c/retrievals.jsonl", "--generator", "http",
            "--generator-config", "http.json", "--out", "labels.jsonl",
        ],
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("annotation aborted"));
    assert!(dir.join("labels.jsonl.partial").is_file());
    assert!(!dir.join("labels.jsonl").exists());
}

#[test]
fn bad_inputs_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let out = adacomp(tmp.path(), &["run", "--config", "missing.json"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.json"));
    let out = adacomp(tmp.path(), &["annotate", "--examples", "a", "--retrievals", "b", "--generator-config", "c", "--out", "d", "--judge", "bleu"]);
    assert_eq!(out.status.code(), Some(2));
}
