use std::path::Path;
use std::process::{Command, Output};

fn execmut(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_execmut")).args(args).output().expect("spawn execmut")
}

fn ok(args: &[&str]) -> String {
    let out = execmut(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn small_config(dir: &Path) -> String {
    let p = dir.join("small.cfg");
    std::fs::write(&p, "# quick corpus\npool_size = 300\nper_bin = 2\n").unwrap();
    p.display().to_string()
}

fn lines(p: &Path) -> usize {
    std::fs::read_to_string(p).unwrap().lines().count()
}

fn csv_value(csv: &str, task: &str, metric: &str) -> String {
    csv.lines()
        .map(|l| l.split(',').collect::<Vec<_>>())
        .find(|c| c[2] == task && c[3] == metric)
        .map(|c| c[4].to_string())
        .unwrap_or_else(|| panic!("{task}/{metric} missing in\n{csv}"))
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(execmut(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(execmut(&["mutate", "--out", "x"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "colour = blue\n").unwrap();
    let out = execmut(&["build-dsl-list", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn pipeline_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.jsonl");
    let out = execmut(&["mutate", "--in", missing.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn transpile_prints_source() {
    let src = ok(&["transpile", "(length a1)"]);
    assert_eq!(src, "def f(a1):\n    return len(a1)\n");
}

#[test]
fn sample_writes_requested_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.jsonl");
    ok(&["sample", "--seed", "3", "--count", "7", "--arity", "2", "--depth", "4", "--out", out.to_str().unwrap()]);
    assert_eq!(lines(&out), 7);
    assert!(dir.path().join("s.jsonl.manifest.json").exists());
    assert_eq!(ok(&["sample", "--seed", "3", "--count", "7", "--arity", "2", "--depth", "4"]), std::fs::read_to_string(&out).unwrap());
}

#[test]
fn build_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    for (out, seed) in [(&a, "1"), (&b, "1"), (&c, "2")] {
        ok(&["build-dsl-list", "--seed", seed, "--config", &cfg, "--out", out.to_str().unwrap()]);
    }
    let read = |d: &Path| std::fs::read(d.join("dsl-list.jsonl")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    assert_eq!(lines(&a.join("dsl-list.jsonl")), 60);
}

#[test]
fn mock_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = |s: &str| dir.path().join(s).display().to_string();
    let cfg = small_config(dir.path());
    ok(&["build-dsl-list", "--seed", "5", "--config", &cfg, "--out", &d("dsl")]);
    ok(&["mutate", "--in", &d("dsl/dsl-list.jsonl"), "--out", &d("pairs"), "--seed", "7"]);
    let pairs = lines(&dir.path().join("pairs/original.jsonl"));
    assert_eq!(pairs, lines(&dir.path().join("pairs/mutated.jsonl")));
    assert!(pairs > 0);
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("pairs/mutate.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 7);
    assert_eq!(m["inputs"].as_array().unwrap().len(), 1);

    ok(&["run-pred", "--pairs", &d("pairs"), "--model", "mock:ground-truth-given", "--out", &d("given")]);
    let records = std::fs::read(dir.path().join("given/prediction.jsonl")).unwrap();
    assert_eq!(lines(&dir.path().join("given/prediction.jsonl")), pairs * 2 * 5);
    ok(&["run-pred", "--pairs", &d("pairs"), "--model", "mock:ground-truth-given", "--out", &d("given")]);
    assert_eq!(std::fs::read(dir.path().join("given/prediction.jsonl")).unwrap(), records);

    ok(&["run-choice", "--pairs", &d("pairs"), "--model", "mock:always-a", "--out", &d("given")]);
    let table = ok(&["report", "--in", &d("given"), "--out", &d("report")]);
    assert!(table.contains("mock:ground-truth-given"), "{table}");
    let csv = std::fs::read_to_string(dir.path().join("report/report.csv")).unwrap();
    assert_eq!(csv_value(&csv, "prediction", "OC"), "100.0");
    assert_eq!(csv_value(&csv, "prediction", "MC"), "100.0");
    assert_eq!(csv_value(&csv, "prediction", "OR"), "0.0");
    assert_eq!(csv_value(&csv, "choice", "Pref"), "50.0");
    assert!(dir.path().join("report/loc_series.dsl-list.mock_ground-truth-given.dat").exists());

    ok(&["run-pred", "--pairs", &d("pairs"), "--model", "mock:ground-truth-original", "--out", &d("orig")]);
    ok(&["report", "--in", &d("orig/prediction.jsonl"), "--out", &d("report2"), "--format", "csv"]);
    let csv = std::fs::read_to_string(dir.path().join("report2/report.csv")).unwrap();
    assert_eq!(csv_value(&csv, "prediction", "OC"), "100.0");
    assert_eq!(csv_value(&csv, "prediction", "MC"), "0.0");
    assert_eq!(csv_value(&csv, "prediction", "MR"), "100.0");
    assert!(!dir.path().join("report2/report.txt").exists());
}

#[test]
fn oracle_mock_needs_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let out = execmut(&["build-llm-list", "--model", "mock:ground-truth-given", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
