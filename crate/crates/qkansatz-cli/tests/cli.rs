use std::process::Command;

use qkansatz::cmap::Prepotential;
use qkansatz_cli::config::{parse_tolerance, CpSpec, GhSpec, Input, PrepSpec};
use qkansatz_cli::report::Accumulator;
use qkansatz_cli::{run, run_with, Overrides, Registry, RunConfig, RunError, Subcommand};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qkansatz"))
}

#[test]
fn config_file_and_overrides() {
    let text = r#"{"subcommand": "cmap", "samples": 7, "seed": 3, "h": 1e-4,
        "tolerances": {"einstein": 1e-3},
        "input": {"prepotential": {"family": "monomial", "c": [1, 0], "powers": [-1, 3]}, "s": -1}}"#;
    let ov = Overrides { seed: Some(9), tolerances: vec![("swann".into(), 0.5)], ..Default::default() };
    let c = RunConfig::load(Subcommand::Cmap, Some(text), &ov).unwrap();
    assert_eq!((c.samples, c.seed, c.h), (7, 9, 1e-4));
    assert_eq!(c.tolerances.len(), 2);
    match c.input {
        Input::Special { prepotential: PrepSpec::Monomial { powers, .. }, s } => {
            assert_eq!(powers, vec![-1, 3]);
            assert_eq!(s, -1.0);
        }
        other => panic!("{other:?}"),
    }
    let d = RunConfig::load(Subcommand::Cp4d, None, &Overrides::default()).unwrap();
    assert_eq!(d.input, Input::Cp(CpSpec::Rho2sq));
}

#[test]
fn malformed_configs() {
    let none = Overrides::default();
    for (sub, text) in [
        (Subcommand::Cmap, "{not json"),
        (Subcommand::Cmap, r#"{"samples": 0}"#),
        (Subcommand::Cmap, r#"{"h": -1}"#),
        (Subcommand::Cmap, r#"{"subcommand": "cp4d"}"#),
        (Subcommand::Cmap, r#"{"extra": 1}"#),
        (Subcommand::Cmap, r#"{"input": {"prepotential": {"family": "cubic"}}}"#),
        (Subcommand::Cmap, r#"{"input": {"prepotential": {"family": "quadratic", "C": [[1,0],[2,0],[3,0]]}}}"#),
        (Subcommand::VerifyGh, r#"{"input": {"family": "five-center"}}"#),
        (Subcommand::Cp4d, r#"{"input": {"potential": "linear-combo", "a": 1}}"#),
    ] {
        assert!(RunConfig::load(sub, Some(text), &none).is_err(), "{text}");
    }
    let asym = r#"{"input": {"prepotential": {"family": "quadratic", "C": [[1,0],[2,0],[3,0],[1,0]]}}}"#;
    assert!(RunConfig::load(Subcommand::Cmap, Some(asym), &none).is_err());
    let mut c = RunConfig::new(Subcommand::Cmap);
    c.input = Input::Special { prepotential: PrepSpec::Monomial { c: [1.0, 0.0], powers: vec![1, 3] }, s: 1.0 };
    assert!(matches!(run(&c), Err(RunError::Usage(_))));
    assert!(parse_tolerance("einstein=1e-3").is_ok());
    assert!(parse_tolerance("einstein").is_err());
    assert!(parse_tolerance("=1").is_err());
}

#[test]
fn pass_iff_residual_within_tolerance() {
    let mut a = Accumulator::new("x", 1e-3);
    a.push(5e-4);
    assert!(a.finish().pass);
    a.push(2e-3);
    assert!(!a.finish().pass);
    let mut b = Accumulator::new("x", 1.0);
    b.push(f64::NAN);
    let r = b.finish();
    assert!(!r.pass && r.max_residual.is_none());
    let mut c = Accumulator::new("x", 1e-3);
    c.push(1e-4);
    let mut d = Accumulator::new("x", 1e-3);
    d.push(3e-4);
    c.merge(&d);
    assert_eq!(c.finish().max_residual, Some(3e-4));
}

#[test]
fn report_keys_sorted_and_stable() {
    let mut c = RunConfig::new(Subcommand::VerifyGh);
    c.samples = 2;
    let r = run(&c).unwrap();
    let json = r.to_json();
    assert_eq!(json, run(&c).unwrap().to_json());
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["checks", "metadata", "pass"]);
    assert!(json.find("\"max_residual\"").unwrap() < json.find("\"name\"").unwrap());
    assert!(!json.contains("wall_time"));
    for c in &r.checks {
        assert_eq!(c.pass, c.max_residual.is_some_and(|v| v <= c.tolerance));
    }
}

#[test]
fn zero_tolerance_fails() {
    let mut c = RunConfig::new(Subcommand::Cp4d);
    c.samples = 3;
    c.tolerances.insert("einstein".into(), 0.0);
    let r = run(&c).unwrap();
    assert!(!r.pass && !r.check("einstein").unwrap().pass);
    c.tolerances.insert("no_such_check".into(), 0.0);
    assert!(matches!(run(&c), Err(RunError::Usage(_))));
}

#[test]
fn plugin_registry() {
    let mut reg = Registry::default();
    reg.gh.insert("mine".into(), qkansatz::gh::two_center_diag().into_gh(qkansatz::excalc::DerivScheme::Dual));
    reg.prepotentials.insert("n1".into(), Prepotential::diagonal(1.0, &[1.0]));
    let mut c = RunConfig::new(Subcommand::ReduceQk);
    c.input = Input::Gh(GhSpec::Plugin { name: "mine".into() });
    c.samples = 3;
    assert!(run_with(&c, &reg).unwrap().pass);
    assert!(matches!(run(&c), Err(RunError::Usage(_))));
    let mut c = RunConfig::new(Subcommand::Legendre);
    c.input = Input::Special { prepotential: PrepSpec::Plugin { name: "n1".into() }, s: 1.0 };
    c.samples = 2;
    let r = run_with(&c, &reg).unwrap();
    assert!(r.check("end_to_end").unwrap().pass);
}

#[test]
fn exit_codes() {
    let ok = bin().args(["verify-gh", "--samples", "2"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(v["metadata"]["samples"], 2);
    let fail = bin().args(["verify-gh", "--samples", "2", "--tolerance", "closure=0"]).output().unwrap();
    assert_eq!(fail.status.code(), Some(1));
    let bad = bin().args(["verify-gh", "--samples", "0"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let flag = bin().args(["verify-gh", "--nope"]).output().unwrap();
    assert_eq!(flag.status.code(), Some(2));
    let missing = bin().args(["cmap", "--config", "/nonexistent/c.json"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
    let timed = bin().args(["cp4d", "--samples", "1", "--timing"]).output().unwrap();
    let v: serde_json::Value = serde_json::from_slice(&timed.stdout).unwrap();
    assert!(v["metadata"]["wall_time_s"].is_f64());
}

#[test]
fn example_configs_load() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs");
    let mut n = 0;
    for e in std::fs::read_dir(dir).unwrap() {
        let path = e.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let sub: Subcommand = serde_json::from_value(v["subcommand"].clone()).unwrap();
        RunConfig::load(sub, Some(&text), &Overrides::default()).unwrap();
        n += 1;
    }
    assert!(n >= 5);
}
