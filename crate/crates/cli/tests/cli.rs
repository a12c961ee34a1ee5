use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn thermopost(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thermopost"))
        .args(args)
        .env_remove("THERMOPOST_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn run_to(config: &str, out: &Path, extra: &[&str]) -> Output {
    let config = scenarios().join(config);
    let mut args = vec!["run", config.to_str().unwrap(), "--output-dir", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    thermopost(&args)
}

fn summary(out: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap()
}

fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

/// Copies the scenario inputs into `dir` with a replacement config.
fn stage(dir: &Path, name: &str, config: &str) -> PathBuf {
    for f in ["full2.json", "not_mixing.json", "bernoulli_grid.json", "direct.json", "zero.json"] {
        fs::copy(scenarios().join(f), dir.join(f)).unwrap();
    }
    let path = dir.join(name);
    fs::write(&path, config).unwrap();
    path
}

#[test]
fn zero_loss_partition_limit_is_zero_and_passes() {
    let out = tempfile::tempdir().unwrap();
    let o = run_to("partition_limit.json", out.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(out.path());
    assert_eq!(s["passed"], true);
    assert_eq!(s["info"]["log_z_rate"].as_f64(), Some(0.0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS partition_limit"));
}

#[test]
fn direct_gibbs_bernoulli_passes() {
    let out = tempfile::tempdir().unwrap();
    let o = run_to("direct_gibbs.json", out.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let s = summary(out.path());
    assert_eq!(s["theta_min"], serde_json::json!([[0.3]]));
    assert_eq!(s["gibbs_k"].as_f64(), Some(1.0));
    let files = tree(out.path());
    for f in ["rates.csv", "audit.csv", "posterior_r0.csv", "concentration_r7.csv", "summary.json"] {
        assert!(files.contains_key(f), "missing {f}");
    }
}

#[test]
fn hidden_gibbs_splits_duplicate_mass_by_prior() {
    let out = tempfile::tempdir().unwrap();
    let o = run_to("hidden_gibbs.json", out.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS duplicate_ratio"));
}

#[test]
fn missing_theta_star_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = stage(
        dir.path(),
        "c.json",
        r#"{"scenario": "direct_gibbs", "sft": "full2.json", "family": "bernoulli_grid.json",
            "loss": "direct.json", "n_schedule": [10]}"#,
    );
    let o = thermopost(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("theta_star"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn wrong_loss_for_scenario_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = stage(
        dir.path(),
        "c.json",
        r#"{"scenario": "direct_gibbs", "sft": "full2.json", "family": "bernoulli_grid.json",
            "loss": "zero.json", "theta_star": 0.3, "n_schedule": [10]}"#,
    );
    let o = thermopost(&["run", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`loss`"));
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(run_to("hidden_gibbs.json", a.path(), &["--threads", "2"]).status.success());
    assert!(run_to("hidden_gibbs.json", b.path(), &[]).status.success());
    assert_eq!(tree(a.path()), tree(b.path()));
}

#[test]
fn seed_flag_overrides_config() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(run_to("posterior_concentration.json", a.path(), &[]).status.success());
    assert!(run_to("posterior_concentration.json", b.path(), &["--seed", "99"]).status.success());
    assert_eq!(summary(b.path())["seed"], 99);
    assert_ne!(tree(a.path())["rates.csv"], tree(b.path())["rates.csv"]);
}

#[test]
fn output_dir_env_var_is_honored() {
    let out = tempfile::tempdir().unwrap();
    let config = scenarios().join("partition_limit.json");
    let o = Command::new(env!("CARGO_BIN_EXE_thermopost"))
        .args(["run", config.to_str().unwrap()])
        .env("THERMOPOST_OUTPUT_DIR", out.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(out.path().join("summary.json").exists());
}

#[test]
fn validate_accepts_a_valid_config_without_writing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = stage(
        dir.path(),
        "c.json",
        r#"{"scenario": "direct_gibbs", "sft": "full2.json", "family": "bernoulli_grid.json",
            "loss": "direct.json", "theta_star": 0.3, "n_schedule": [10]}"#,
    );
    let before = tree(dir.path());
    let o = thermopost(&["validate", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("grid: 9 points"));
    assert!(!stdout.contains("error:"));
    assert_eq!(tree(dir.path()), before);
}

#[test]
fn validate_reports_a_non_mixing_sft() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = stage(
        dir.path(),
        "c.json",
        r#"{"scenario": "partition_limit", "sft": "not_mixing.json", "family": "bernoulli_grid.json",
            "loss": "zero.json", "theta_star": 0.3, "n_schedule": [10]}"#,
    );
    let before = tree(dir.path());
    let o = thermopost(&["validate", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("error: sft") && stdout.contains("not_mixing.json") && stdout.contains("is_mixing = false"));
    assert_eq!(tree(dir.path()), before);
}

#[test]
fn validate_reports_a_zero_prior_weight() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = stage(
        dir.path(),
        "c.json",
        r#"{"scenario": "direct_gibbs", "sft": "full2.json", "family": "holey.json",
            "loss": "direct.json", "theta_star": 0.3, "n_schedule": [10]}"#,
    );
    fs::write(
        dir.path().join("holey.json"),
        r#"{"grid": [0.2, 0.3, 0.4], "prior": [1, 0, 1], "potential": {"kind": "bernoulli"}}"#,
    )
    .unwrap();
    let o = thermopost(&["validate", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stdout).contains("fully supported"));
}
