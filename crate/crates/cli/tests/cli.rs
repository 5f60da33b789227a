use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_levy-invest");

const BENCHMARK: &str = r#"
seed = 3
r = 2.0
[model]
family = "brownian_drift"
mu = 0.0
sigma = 1.4142135623730951
[profit]
kind = "cobb_douglas"
alpha = 0.5
beta = 0.5
[mc]
n_paths = 500
step = 0.01
[grid]
n = 5
"#;

fn run(args: &[&str], cfg: Option<&Path>, out: Option<&Path>) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args);
    if let Some(c) = cfg {
        cmd.arg("--config").arg(c);
    }
    if let Some(o) = out {
        cmd.arg("--out").arg(o);
    }
    cmd.output().unwrap()
}

fn error_json(o: &Output) -> serde_json::Value {
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    v["error"].clone()
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let o = run(&["frobnicate"], None, None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_config_reports_json_error() {
    let o = run(&["boundary"], None, None);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(error_json(&o)["key"], "--config");
}

#[test]
fn invalid_value_names_its_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(
        &cfg,
        BENCHMARK
            .replace("beta = 0.5", "gamma = 1.5")
            .replace("cobb_douglas", "ces"),
    )
    .unwrap();
    let o = run(&["boundary"], Some(&cfg), Some(dir.path()));
    assert_eq!(o.status.code(), Some(1));
    let e = error_json(&o);
    assert_eq!(e["kind"], "validation_error");
    assert_eq!(e["key"], "profit.gamma");
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, BENCHMARK.replace("[grid]", "[grid]\nspacing = 2")).unwrap();
    let o = run(&["boundary"], Some(&cfg), Some(dir.path()));
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(error_json(&o)["kind"], "parse_error");
}

#[test]
fn empty_no_investment_region_is_a_bracket_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("kappa.toml");
    let text = BENCHMARK
        .replace("r = 2.0", "r = 0.2")
        .replace("kind = \"cobb_douglas\"", "kind = \"ces\"")
        .replace("beta = 0.5", "gamma = 0.5");
    std::fs::write(&cfg, text).unwrap();
    let o = run(&["boundary"], Some(&cfg), Some(dir.path()));
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(error_json(&o)["kind"], "bracket_failure");
}

#[test]
fn boundary_writes_csv_and_json_with_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("ok.toml");
    std::fs::write(&cfg, BENCHMARK).unwrap();
    let out = dir.path().join("out");
    let o = run(&["boundary"], Some(&cfg), Some(&out));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let listed: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(listed["artifacts"].as_array().unwrap().len(), 2);

    let mut csv = csv::Reader::from_path(out.join("boundary.csv")).unwrap();
    let headers = csv.headers().unwrap().clone();
    for h in ["u", "b", "provenance", "config_sha256", "seed"] {
        assert!(headers.iter().any(|x| x == h), "missing column {h}");
    }
    let rows: Vec<csv::StringRecord> = csv.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 5);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("boundary.json")).unwrap()).unwrap();
    assert_eq!(json["meta"]["subcommand"], "boundary");
    assert_eq!(json["meta"]["seed"], 3);
    assert_eq!(json["meta"]["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn seed_override_changes_sampled_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("ok.toml");
    std::fs::write(&cfg, BENCHMARK).unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(run(&["compare", "--seed", "1"], Some(&cfg), Some(&a)).status.success());
    assert!(run(&["compare", "--seed", "2"], Some(&cfg), Some(&b)).status.success());
    let ja = std::fs::read(a.join("compare.csv")).unwrap();
    let jb = std::fs::read(b.join("compare.csv")).unwrap();
    assert_ne!(ja, jb);
}

#[test]
fn shipped_configs_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            levy_invest_cli::load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert_eq!(seen, 5);
}
