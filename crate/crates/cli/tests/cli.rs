use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ultrana(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ultrana"))
        .args(args)
        .env_remove("ULTRANA_PRECISION")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn bootstrap_ratio_writes_a_grid_csv() {
    let out = ultrana(&["bootstrap-ratio", "--c0", "1", "--kappa", "2", "--nmax", "100000"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("c0,kappa,C,n,R"));
    let rows: Vec<&str> = lines.collect();
    assert!(rows.last().unwrap().starts_with("1,2,2.0000000000000000000e0,100000,"));
    // every numeric cell carries 20 significant digits
    let r = rows[10].rsplit(',').next().unwrap();
    let mantissa = r.split('e').next().unwrap().replace('.', "");
    assert_eq!(mantissa.len(), 20);
}

#[test]
fn kappa_below_one_is_a_usage_error() {
    let out = ultrana(&["bootstrap-ratio", "--kappa", "0.5"]);
    assert_eq!(code(&out), 2);
    assert!(out.stdout.is_empty());
}

#[test]
fn malformed_numbers_are_usage_errors() {
    assert_eq!(code(&ultrana(&["bootstrap-ratio", "--c0", "one"])), 2);
    assert_eq!(code(&ultrana(&["bootstrap-ratio", "--nmax", "-3"])), 2);
    assert_eq!(code(&ultrana(&["no-such-command"])), 2);
}

#[test]
fn outputs_are_byte_identical_and_metadata_is_separate() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = ultrana(&["bootstrap-ratio", "--c0", "1/2,1", "--kappa", "2,e", "--nmax", "2000", "--output", path.to_str().unwrap()]);
        assert_eq!(code(&out), 0);
        assert!(out.stdout.is_empty());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let meta = read_json(&dir.path().join("a.csv.meta.json"));
    assert_eq!(meta["command"], "bootstrap-ratio");
    assert_eq!(meta["precision_bits"], 256);
    assert!(meta["created"].as_str().unwrap().contains('T'));
    assert_eq!(meta["summary"].as_array().unwrap().len(), 4);
}

#[test]
fn lambda_falsification_reports_the_violating_order() {
    let out = ultrana(&["sharp", "--c0", "1", "--falsify", "lambda", "--lambda", "2", "--C", "5", "--nmax", "2000", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["violating_n"], 31);
    assert_eq!(v["target"], "lambda_bound");
}

#[test]
fn kappa_falsification_needs_kappa_below_one() {
    let out = ultrana(&["sharp", "--c0", "40", "--falsify", "kappa", "--kappa", "2", "--C", "1"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn config_file_is_read_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let out_path = dir.path().join("fit.csv");
    let config = serde_json::json!({
        "precision_bits": "128",
        "nmax": "300",
        "c0_list": ["1/2"],
        "kappa_list": ["2", "e"],
        "output_path": out_path,
        "params": { "cp": "2" },
    });
    std::fs::write(&cfg, config.to_string()).unwrap();
    let out = ultrana(&["fit-k", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().nth(2).unwrap().starts_with("1/2,e,"));
    assert_eq!(read_json(&dir.path().join("fit.csv.meta.json"))["precision_bits"], 128);

    let out = ultrana(&["fit-k", "--config", cfg.to_str().unwrap(), "--kappa", "10", "--precision", "192"]);
    assert_eq!(code(&out), 0);
    let csv = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().starts_with("1/2,10,"));
    assert_eq!(read_json(&dir.path().join("fit.csv.meta.json"))["precision_bits"], 192);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{ "kapa_list": ["2"] }"#).unwrap();
    assert_eq!(code(&ultrana(&["fit-k", "--config", cfg.to_str().unwrap()])), 2);
}

#[test]
fn environment_sets_default_precision() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.csv");
    let run = |env: &str| {
        Command::new(env!("CARGO_BIN_EXE_ultrana"))
            .args(["propagate", "--nmax", "40", "--output", path.to_str().unwrap()])
            .env("ULTRANA_PRECISION", env)
            .output()
            .unwrap()
    };
    assert_eq!(code(&run("160")), 0);
    assert_eq!(read_json(&dir.path().join("p.csv.meta.json"))["precision_bits"], 160);
    assert_eq!(code(&run("32")), 2);
}

#[test]
fn failing_checks_exit_one() {
    // the C0 = 10 implied constants are still rising at N = 500
    let out = ultrana(&["fit-k", "--c0", "10", "--kappa", "2"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8(out.stdout).unwrap().contains("10,2,0,"));
}

#[test]
fn acceptance_subset_and_precision_stability() {
    let run = |prec: &str| {
        let out = ultrana(&["acceptance", "--only", "multiindex", "--precision", prec, "--format", "json"]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let v: Value = serde_json::from_slice(&out.stdout).unwrap();
        v["criteria"].as_array().unwrap().iter().map(|c| (c["id"].as_u64().unwrap(), c["passed"].as_bool().unwrap())).collect::<Vec<_>>()
    };
    let base = run("256");
    assert_eq!(base, vec![(9, true)]);
    assert_eq!(run("512"), base);
}

#[test]
fn acceptance_filter_by_number() {
    let out = ultrana(&["acceptance", "--only", "5"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().starts_with("5,\"sharp-example exactness\",true,"));
    assert!(String::from_utf8(out.stderr).unwrap().contains("criterion  5 [PASS]"));
}

#[test]
fn kernel_and_holder_commands_pass() {
    for args in [
        vec!["kernel", "--s", "2", "--d", "2"],
        vec!["holder", "--check", "coeff"],
        vec!["holder", "--check", "interpolation", "--kmax", "6"],
        vec!["multiindex", "--dmax", "3", "--order-max", "6"],
        vec!["majorant", "--lemma", "monotonicity", "--nmax", "1000"],
        vec!["majorant", "--lemma", "supergaussian", "--L", "3", "--nmax", "4096"],
    ] {
        let out = ultrana(&args);
        assert_eq!(code(&out), 0, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}
