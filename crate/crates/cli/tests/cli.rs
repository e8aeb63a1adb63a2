use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn specquant(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_specquant"))
        .args(args)
        .env_remove("SPECQUANT_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

/// CSV body without the `#` header lines.
fn records(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn series_csv(values: impl IntoIterator<Item = f64>) -> String {
    let mut s = String::from("value\n");
    for v in values {
        s.push_str(&format!("{v}\n"));
    }
    s
}

const WN_TEST: &str = r#"{
  "null": {"model": {"noise": {"family": "white_noise", "variance": 1.0}}},
  "p": 0.7,
  "alpha": 0.1
}"#;

#[test]
fn table1_preset_reproduces_structural_columns() {
    let out = specquant(&["estimate", "--preset", "table1"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("# specquant "));
    let rows = records(&text);
    assert_eq!(rows[0][..4], ["model", "n", "p", "kind"]);
    let body = &rows[1..];
    assert_eq!(body.len(), 4 * 6);
    let col = |name: &str| rows[0].iter().position(|c| c == name).unwrap();
    let (p, mean, single) = (col("p"), col("mean"), col("single"));
    for r in body.iter().filter(|r| r[p] == "0.5") {
        assert_eq!(r[mean].parse::<f64>().unwrap(), 0.0);
        assert_eq!(r[single].parse::<f64>().unwrap(), 0.0);
    }
    let ar_neg = body
        .iter()
        .find(|r| r[0] == "AR(1) -0.9" && r[p] == "0.6")
        .unwrap();
    assert!(ar_neg[mean].parse::<f64>().unwrap() > 2.0);
    let ar_pos: Vec<f64> = body
        .iter()
        .filter(|r| r[0] == "AR(1) 0.9")
        .map(|r| r[mean].parse().unwrap())
        .collect();
    assert!(ar_pos.windows(2).all(|w| w[0] <= w[1]), "{ar_pos:?}");
}

#[test]
fn estimate_is_deterministic_and_seed_overridable() {
    let a = stdout(&specquant(&["estimate", "--preset", "table2"]));
    let b = stdout(&specquant(&["estimate", "--preset", "table2", "--threads", "1"]));
    let c = stdout(&specquant(&["estimate", "--preset", "table2", "--seed", "7"]));
    assert_eq!(a, b);
    assert_ne!(records(&a), records(&c));
    assert!(c.contains("\"base_seed\":7"));
}

#[test]
fn per_estimate_rows_carry_seeds() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "est.json",
        r#"{
  "models": [{"name": "wn", "model": {"noise": {"family": "white_noise"}}}],
  "p": [0.3, 0.7],
  "n": [40],
  "replications": 5,
  "estimator": "smoothed",
  "rows": "estimates"
}"#,
    );
    let out = specquant(&["estimate", "--config", &cfg]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = records(&stdout(&out));
    assert_eq!(rows[0], ["model", "p", "lambda_hat", "kind", "n", "m", "seed"]);
    assert_eq!(rows.len(), 1 + 5 * 2);
    assert!(rows[1..].iter().all(|r| r[3] == "smoothed" && r[5] == "4"));
}

#[test]
fn null_series_is_not_rejected() {
    let dir = TempDir::new().unwrap();
    let sim = write(
        dir.path(),
        "sim.json",
        r#"{"model": {"model": {"noise": {"family": "white_noise"}}}, "n": 50, "base_seed": 99}"#,
    );
    let series_dir = dir.path().join("series");
    let out = specquant(&["simulate", "--config", &sim, "--out", series_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let series = series_dir.join("replicate_000.csv");
    assert!(series.exists());
    assert!(series_dir.join("config.json").exists());

    let cfg = write(dir.path(), "test.json", WN_TEST);
    let out = specquant(&["test", "--config", &cfg, "--input", series.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}{}", stdout(&out), stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("reject,false"));
    assert!(text.contains("critical,1.64485"));
}

#[test]
fn low_frequency_sinusoid_is_rejected() {
    let dir = TempDir::new().unwrap();
    let series = write(
        dir.path(),
        "x.csv",
        &series_csv((1..=50).map(|t| 5.0 * (0.2 * t as f64).cos())),
    );
    let cfg = write(dir.path(), "test.json", WN_TEST);
    let out = specquant(&["test", "--config", &cfg, "--input", &series]);
    assert_eq!(out.status.code(), Some(2), "{}{}", stdout(&out), stderr(&out));
    assert!(stdout(&out).contains("reject,true"));
}

#[test]
fn test_errors_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "test.json", WN_TEST);

    let missing = dir.path().join("absent.csv");
    let out = specquant(&["test", "--config", &cfg, "--input", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("error:"));

    let bad = write(dir.path(), "bad.csv", "value\n0.1\n0.2\nnope\n0.4\n");
    let out = specquant(&["test", "--config", &cfg, "--input", &bad]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("row 4"), "{}", stderr(&out));

    let out = specquant(&["test", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--input"));
}

#[test]
fn config_errors_point_at_the_offending_line() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "test.json",
        r#"{
  "null": {"model": {"noise": {"family": "white_noise"}}},
  "p": 0.7,
  "alpha": 1.5
}"#,
    );
    let out = specquant(&["test", "--config", &cfg, "--input", "unused.csv"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("test.json:4"), "{err}");
    assert!(err.contains("alpha"), "{err}");

    let typo = write(dir.path(), "typo.json", "{\n  \"null\": {},\n  \"pp\": 0.7\n}");
    let out = specquant(&["test", "--config", &typo]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("typo.json:"), "{}", stderr(&out));
}

#[test]
fn preset_must_match_command() {
    let out = specquant(&["power", "--preset", "table1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("estimate"));
    let out = specquant(&["estimate", "--preset", "table9"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("table1"));
}

#[test]
fn single_model_power_table_has_empty_diagonal() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "power.json",
        r#"{
  "models": [{"name": "WN", "model": {"noise": {"family": "white_noise"}}}],
  "p": [0.7],
  "replications": 20,
  "sigma_replications": 20
}"#,
    );
    let out = specquant(&["power", "--config", &cfg]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = records(&stdout(&out));
    assert_eq!(rows, [vec!["p", "null\\alternative", "WN"], vec!["0.7", "WN", "--"]]);
}

#[test]
fn power_output_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "power.json",
        r#"{
  "models": [
    {"name": "WN", "model": {"noise": {"family": "white_noise"}}},
    {"name": "AR", "model": {"noise": {"family": "ar1", "coeff": 0.9}}}
  ],
  "p": [0.7, 0.8],
  "replications": 30,
  "sigma_replications": 30
}"#,
    );
    let a = stdout(&specquant(&["power", "--config", &cfg]));
    let b = stdout(&specquant(&["power", "--config", &cfg, "--threads", "2"]));
    assert_eq!(a, b);
    let rows = records(&a);
    assert_eq!(rows.len(), 1 + 2 * 2);
    assert_eq!(a.matches("# sigma_hat").count(), 4);
    for r in &rows[1..] {
        let off: Vec<&String> = r[2..].iter().filter(|c| *c != "--").collect();
        assert_eq!(off.len(), 1);
        let rate: f64 = off[0].parse().unwrap();
        assert!((0.0..=1.0).contains(&rate));
    }
}

#[test]
fn diagnose_writes_tidy_rows() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "diag.json",
        r#"{
  "model": {"model": {"noise": {"family": "white_noise"}}},
  "tn": {"lambda": 0.785, "betas": [1.0], "n": [64, 128], "replications": 50},
  "raw_limit": {"p": 0.7, "n": [30], "replications": 50}
}"#,
    );
    let out_path = dir.path().join("diag.csv");
    let out = specquant(&["diagnose", "--config", &cfg, "--out", out_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = records(&fs::read_to_string(out_path).unwrap());
    assert_eq!(rows[0].len(), 15);
    let tn = rows.iter().filter(|r| r[0] == "tn_variance").count();
    let raw = rows.iter().filter(|r| r[0] == "raw_limit").count();
    assert_eq!((tn, raw), (2, 2));
    assert!(rows[1..].iter().all(|r| r.len() == 15));
}
