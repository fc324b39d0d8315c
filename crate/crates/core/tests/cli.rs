use std::f64::consts::{E, PI};
use std::path::{Path, PathBuf};
use std::process::Command;

use apev::apfun::Coefficient;
use apev::evolution::EvolutionSystem;
use apev::solver::{constants, picard_solve, ContractionGate, ForcingTerm, ModalForcing, ModalSine, Plus, SolveConfig};
use apev::spectral::eigenvalue;
use serde_json::Value;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn apev(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_apev")).args(args).output().unwrap();
    Run {
        code: out.status.code().unwrap(),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn shipped(name: &str) -> String {
    configs().join(name).to_str().unwrap().to_string()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

/// The single-line JSON error object on stderr.
fn error_of(r: &Run) -> Value {
    let lines: Vec<&str> = r.stderr.lines().collect();
    assert_eq!(lines.len(), 1, "stderr: {}", r.stderr);
    let v: Value = serde_json::from_str(lines[0]).unwrap();
    assert_eq!(v["exitCode"].as_i64(), Some(r.code as i64));
    v
}

#[test]
fn analyze_finds_multiples_of_two_pi() {
    let r = apev(&["analyze", &shipped("analyze_sin.json")]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep: Value = serde_json::from_str(&r.stdout).unwrap();
    let taus: Vec<f64> = rep["almostPeriods"].as_array().unwrap().iter().map(|t| t.as_f64().unwrap()).collect();
    assert!(!taus.is_empty());
    for tau in &taus {
        let k = (tau / (2.0 * PI)).round();
        assert!(k >= 1.0 && (tau - 2.0 * PI * k).abs() < 2e-3, "{tau}");
    }
    for k in 1..=3 {
        assert!(taus.iter().any(|t| (t - 2.0 * PI * k as f64).abs() < 2e-3));
    }
}

#[test]
fn analyze_flags_piecewise_b_as_stepanov_only() {
    let r = apev(&["analyze", &shipped("analyze_piecewise_b.json")]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rep: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(rep["verdict"], "StepanovAPOnly");
    assert_eq!(rep["continuous"], false);
}

#[test]
fn analyze_writes_to_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let r = apev(&["analyze", &shipped("analyze_sin.json"), "--out", out.to_str().unwrap()]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.is_empty());
    let rep: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(rep["epsilon"].as_f64(), Some(1e-3));
}

#[test]
fn missing_eps_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"signal": {"coefficient": {"kind": "constant", "c": 1}}, "analysis": {"tau_range": [1, 5]}}"#,
    );
    let r = apev(&["analyze", &cfg]);
    assert_eq!(r.code, 4);
    let e = error_of(&r);
    assert_eq!(e["error"], "invalid_config");
    assert_eq!(e["path"], "analysis.eps");
    assert!(e["message"].as_str().unwrap().contains("analysis.eps"));
}

#[test]
fn unknown_and_invalid_values_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "u.json", r#"{"signal": {"coefficient": {"kind": "constant", "c": 1}, "t2": 4}}"#);
    let r = apev(&["analyze", &cfg]);
    assert_eq!(r.code, 4);
    assert_eq!(error_of(&r)["path"], "signal.t2");

    let cfg = write(dir.path(), "n.json", r#"{"system": {"d1": {"kind": "constant", "c": 1}}, "solver": {"rho": -1}}"#);
    let r = apev(&["solve", &cfg, "--linear"]);
    assert_eq!(r.code, 4);
    assert_eq!(error_of(&r)["path"], "solver.rho");

    let cfg = write(dir.path(), "lv.json", r#"{"lv": {"d_tilde_1": 1, "d_hat_1": 1}}"#);
    let r = apev(&["lv-demo", &cfg, "--out", dir.path().join("x").to_str().unwrap()]);
    assert_eq!(r.code, 4);
    assert!(error_of(&r)["path"].as_str().unwrap().starts_with("lv."));
}

#[test]
fn runtime_and_argument_errors() {
    let r = apev(&["analyze", "/nonexistent/config.json"]);
    assert_eq!(r.code, 1);
    assert_eq!(error_of(&r)["error"], "io");

    let r = apev(&["frobnicate"]);
    assert_eq!(r.code, 4);
    error_of(&r);

    let r = apev(&["constants", "--alpha", "0.5"]);
    assert_eq!(r.code, 4);
    error_of(&r);

    let r = apev(&["--help"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.contains("lv-demo"));
}

#[test]
fn constants_examples() {
    let r = apev(&["constants", "--alpha", "0.5", "--gamma", "1", "--delta", "1", "--m-alpha", "1", "--c-alpha", "1"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    assert!((v["K_contraction"].as_f64().unwrap() - (PI.sqrt() / 2.0 + 1.0)).abs() < 1e-12);

    let r = apev(&[
        "constants",
        "--alpha",
        "0.5",
        "--gamma",
        "2",
        "--delta",
        "2",
        "--m-alpha",
        "1",
        "--c-alpha",
        "1",
        "--p",
        "2",
    ]);
    let v: Value = serde_json::from_str(&r.stdout).unwrap();
    let direct = 2.0 * 0.5f64.sqrt() * E / (E - 1.0);
    assert!((v["K_bsp"].as_f64().unwrap() - direct).abs() < 1e-12);

    let r = apev(&["constants", "--alpha", "1.5", "--gamma", "1", "--delta", "1", "--m-alpha", "1"]);
    assert_eq!(r.code, 4);
    assert_eq!(error_of(&r)["error"], "invalid_argument");
}

#[test]
fn constants_to_out_file_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("k.json");
    let r = apev(&[
        "constants",
        "--alpha",
        "0.6",
        "--gamma",
        "3",
        "--delta",
        "6",
        "--m-alpha",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.code, 0);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    let k = constants(0.6, 3.0, 6.0, 2.0, 0.0, 1.0).unwrap();
    assert_eq!(v["K_inf"].as_f64(), Some(k.k_inf));
    assert_eq!(v["K_contraction"].as_f64(), Some(k.k_contraction));
}

#[test]
fn zero_forcing_linear_solve_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "z.json",
        r#"{"system": {"d1": {"kind": "constant", "c": 1}}, "spatial": {"modes": 4}, "solver": {"t1": 5}}"#,
    );
    let r = apev(&["solve", &cfg, "--linear"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let mut lines = r.stdout.lines();
    assert_eq!(lines.next(), Some("t,mode,component,value"));
    let mut rows = 0;
    for line in lines {
        let value: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(value, 0.0);
        rows += 1;
    }
    assert_eq!(rows, 501 * 4 * 2);
}

#[test]
fn contraction_violation_exits_two_unless_forced() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("semilinear_toy.json")).unwrap();
    let cfg = write(dir.path(), "v.json", &text.replace("\"amplitude\": 0.5 }", "\"amplitude\": 5.0 }"));
    let r = apev(&["solve", &cfg, "--semilinear"]);
    assert_eq!(r.code, 2);
    let e = error_of(&r);
    assert_eq!(e["error"], "contraction_violated");
    assert!(e["message"].as_str().unwrap().contains(">= 1"));

    // the gate is only sufficient: past it this iteration still contracts
    let r = apev(&["solve", &cfg, "--semilinear", "--force", "--out", dir.path().join("f").to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let report: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(report["result"]["forced"], true);
    assert_eq!(report["result"]["converged"], true);
    assert!(report["result"]["contractionProduct"].as_f64().unwrap() >= 1.0);
}

#[test]
fn iteration_budget_exhaustion_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("semilinear_toy.json")).unwrap();
    let cfg = write(dir.path(), "n.json", &text.replace("\"rho\": 1.0", "\"rho\": 1.0, \"max_iter\": 2"));
    let r = apev(&["solve", &cfg, "--semilinear"]);
    assert_eq!(r.code, 3);
    assert_eq!(error_of(&r)["error"], "non_convergence");
}

#[test]
fn semilinear_cli_matches_library_solve() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("toy");
    let r = apev(&["solve", &shipped("semilinear_toy.json"), "--semilinear", "--out", out.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["result"]["converged"], true);

    let cfg = SolveConfig { t0: 0.0, t1: 10.0, dt: 0.01, rho: 1.0, ..SolveConfig::default() };
    let d = Coefficient::QuasiPeriodicCos { d_tilde: 3.0, d_hat: 1.0 };
    let window = (cfg.t0 - cfg.tail_cut - 1.0, cfg.t1 + cfg.tail_cut + 1.0);
    let sys = EvolutionSystem::new(d.clone(), d, Coefficient::constant(0.0), 1.0, 16, window, 2.5e-3).unwrap();
    let harmonic = |amplitude, omega| Coefficient::Harmonic { amplitude, omega, phase: 0.0 };
    let forcing = ModalForcing::new(
        2,
        16,
        vec![
            ForcingTerm { component: 0, mode: 1, coefficient: harmonic(1.0, 1.0) },
            ForcingTerm { component: 1, mode: 2, coefficient: harmonic(0.5, 2.0) },
        ],
    )
    .unwrap();
    let f = ModalSine { dim: 32, amplitude: 0.5 };
    let delta = sys.delta();
    let gamma = cfg.gamma_ratio * delta;
    let k = constants(cfg.alpha, gamma, delta, sys.m_alpha_bound(cfg.alpha, gamma).unwrap(), 0.0, cfg.p).unwrap();
    let gate = ContractionGate {
        lipschitz: 0.5 * eigenvalue(1, 1.0).powf(-cfg.alpha),
        k_contraction: k.k_inf.max(k.k_contraction),
        force: false,
    };
    let (u, conv) = picard_solve(&sys, &Plus(&f, &forcing), &cfg, &gate, None).unwrap();
    let mut csv = Vec::new();
    u.write_csv(&mut csv).unwrap();
    assert_eq!(std::fs::read(out.join("solution.csv")).unwrap(), csv);
    assert_eq!(report["result"]["iterations"].as_u64(), Some(conv.iterations as u64));
}

#[test]
fn lv_demo_cases_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let quick = r#""analysis": {"eps": 0.2, "p": 1, "tau_range": [1, 6], "tau_step": 0.05}, "solver": {"t1": 12}"#;
    let zero =
        write(dir.path(), "zero.json", &format!(r#"{{"lv": {{"a_tilde": 0, "c_tilde": 0, "modes": 8}}, {quick}}}"#));
    let out = dir.path().join("zero");
    let r = apev(&["lv-demo", &zero, "--out", out.to_str().unwrap()]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let verdict: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(verdict["supPair"].as_f64(), Some(0.0));
    for f in ["solution.csv", "dichotomy.json", "constants.json", "convergence.json", "ap_report.json", "verdict.json"]
    {
        assert!(out.join(f).exists(), "{f}");
    }

    let far = write(
        dir.path(),
        "far.json",
        &format!(
            r#"{{"lv": {{"modes": 8}}, "solver": {{"t1": 12, "rho": 5}}, {}}}"#,
            &quick[..quick.find(", \"solver\"").unwrap()]
        ),
    );
    let r = apev(&["lv-demo", &far, "--out", dir.path().join("far").to_str().unwrap()]);
    assert_eq!(r.code, 2, "{}", r.stderr);
    assert_eq!(error_of(&r)["error"], "contraction_violated");

    let r = apev(&["lv-demo", &zero]);
    assert_eq!(r.code, 4);
    assert_eq!(error_of(&r)["path"], "--out");
}
