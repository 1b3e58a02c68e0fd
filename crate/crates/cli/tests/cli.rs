use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gibbslab_core::ProbValue;
use serde_json::Value;

fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_gibbslab"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn run(sub: &str, config: &Path, extra: &[&str]) -> Output {
    Command::new(bin()).arg(sub).arg("--config").arg(config).args(extra).output().unwrap()
}

fn stderr_record(out: &Output) -> Value {
    serde_json::from_slice(out.stderr.trim_ascii()).expect("stderr is one JSON record")
}

/// Rows of the named table in a CSV report.
fn table(text: &str, name: &str) -> Vec<Vec<String>> {
    let marker = format!("# table: {name}");
    text.lines()
        .skip_while(|l| *l != marker)
        .skip(2)
        .take_while(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn malformed_json_exits_one_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.json", "{\"params\": ");
    let out_file = dir.path().join("out.csv");
    let out = run("bs-badconfig", &cfg, &["--out", out_file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_record(&out)["exit_code"], 1);
    assert!(!out_file.exists());
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "extra.json",
        r#"{"params": {"channel": {"d": 2, "k": 3, "eps": "1/4"}, "n_max": 3, "colour": 1}}"#,
    );
    let out = run("bs-badconfig", &cfg, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_record(&out)["message"].as_str().unwrap().contains("colour"));
}

#[test]
fn cap_exceeded_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cap.json",
        r#"{"mode": "float", "params": {"channel": {"d": 2, "k": 3, "eps": "1/10"}, "n_max": 40}}"#,
    );
    let out = run("bs-entropy", &cfg, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_record(&out)["exit_code"], 2);
}

#[test]
fn conditioning_on_a_null_word_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "null.json",
        r#"{"params": {"channel": {"d": 2, "k": 3, "eps": "1/4"}, "conditionals": [{"target": [2], "given": [0, 0]}]}}"#,
    );
    let out_file = dir.path().join("out.json");
    let out = run("bs-cylinder", &cfg, &["--out", out_file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!out_file.exists());
}

#[test]
fn bad_config_table_satisfies_the_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bc.json",
        r#"{"seed": 3, "params": {"channel": {"d": 2, "k": 3, "p": ["1/3", "2/3"], "eps": "1/5"}, "n_max": 8}}"#,
    );
    let out = run("bs-badconfig", &cfg, &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# gibbslab "));
    assert!(text.contains("# config_hash: sha256:"));
    let rows = table(&text, "bad_config");
    assert_eq!(rows.len(), 8);
    let eps = ProbValue::ratio(1, 5);
    let p2e = &ProbValue::ratio(1, 3) * &eps;
    for row in rows {
        let n: usize = row[0].parse().unwrap();
        let nu_0_2n: ProbValue = row[1].parse().unwrap();
        let nu_2n: ProbValue = row[2].parse().unwrap();
        let cond: ProbValue = row[3].parse().unwrap();
        let mut want = eps.clone();
        for _ in 0..=n {
            want = &want * &p2e;
        }
        assert_eq!(nu_0_2n, want, "n={n}");
        assert_eq!(&nu_0_2n / &nu_2n, cond);
    }
}

#[test]
fn noiseless_entropy_bounds_equal_log_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "flat.json",
        r#"{"mode": "float", "params": {"channel": {"d": 2, "k": 3, "eps": 0}, "n_max": 6}}"#,
    );
    let out = run("bs-entropy", &cfg, &[]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for row in table(&text, "entropy") {
        let lower: f64 = row[2].parse().unwrap();
        let upper: f64 = row[3].parse().unwrap();
        assert!((lower - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((upper - std::f64::consts::LN_2).abs() < 1e-12);
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bk.json", r#"{"seed": 99, "params": {"ks": [2, 3, 5], "samples": 5000}}"#);
    let one = run("wg-badsets", &cfg, &["--threads", "1"]);
    let four = run("wg-badsets", &cfg, &["--threads", "4"]);
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
    let other_seed = run("wg-badsets", &cfg, &["--seed", "100"]);
    assert_ne!(one.stdout, other_seed.stdout);
}

#[test]
fn json_reports_carry_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cyl.json",
        r#"{"params": {"channel": {"d": 2, "k": 3, "eps": "1/4"}, "words": [[0, 2], [0, 0]]}}"#,
    );
    let out = run("bs-cylinder", &cfg, &["--precision", "6"]);
    assert!(out.status.success());
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["meta"]["subcommand"], "bs-cylinder");
    assert_eq!(doc["meta"]["precision"], 6);
    assert!(doc["meta"]["config_hash"].as_str().unwrap().starts_with("sha256:"));
}
