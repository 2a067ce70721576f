use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn qmarkov() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_qmarkov"));
    c.env_remove("QMARKOV_TOLERANCES");
    c
}

fn run(args: &[&str]) -> Output {
    qmarkov().args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn gen(name: &str, args: &[&str]) -> PathBuf {
    let path = scratch(name);
    let mut all = vec!["gen"];
    all.extend_from_slice(args);
    all.extend_from_slice(&["--out", path.to_str().unwrap()]);
    let out = run(&all);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("report is JSON")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn valid_ising_spec_validates() {
    let spec = gen("ising.json", &["ising", "--j1", "0.5", "--j2", "-1"]);
    let out = run(&["validate", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report = json(&out);
    assert_eq!(report["validation"]["passed"], true);
    assert_eq!(report["input_digest"].as_str().unwrap().len(), 64);
}

#[test]
fn dimension_mismatch_is_reported_with_its_path() {
    let spec = gen("mismatch.json", &["ising", "--j1", "1", "--j2", "1"]);
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(&spec).unwrap()).unwrap();
    doc["sites"][1]["blocks"][0]["h"] = serde_json::json!({"diag": [0.0, 0.0]});
    std::fs::write(&spec, doc.to_string()).unwrap();
    let out = run(&["validate", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("sites[1].blocks[0].h"), "{}", stderr(&out));
}

#[test]
fn unknown_fields_are_rejected() {
    let spec = gen("unknown.json", &["ising", "--j1", "1", "--j2", "1"]);
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(&spec).unwrap()).unwrap();
    doc["temperature"] = serde_json::json!(1.0);
    std::fs::write(&spec, doc.to_string()).unwrap();
    let out = run(&["validate", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("temperature"), "{}", stderr(&out));
}

#[test]
fn missing_input_is_an_io_failure() {
    let out = run(&["validate", scratch("does-not-exist.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn generated_specs_round_trip_and_reports_are_reproducible() {
    for (name, args) in [
        ("rt-ising.json", vec!["ising", "--j1", "1/3", "--j2", "-2", "--exact"]),
        ("rt-markov.json", vec!["markov", "--matrix", "0.2,0.8;0.5,0.5"]),
        ("rt-random.json", vec!["random", "--seed", "3", "--dims", "2,3"]),
        ("rt-pool.json", vec!["random", "--seed", "4", "--dims", "3", "--pool", "rational-log", "--base", "3"]),
    ] {
        let spec = gen(name, &args);
        let first = std::fs::read(&spec).unwrap();
        let out = run(&["validate", spec.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", stderr(&out));
        // Regenerating from the same arguments gives the same bytes.
        assert_eq!(std::fs::read(gen(name, &args)).unwrap(), first, "{name}");
        let a = run(&["report", spec.to_str().unwrap()]);
        let b = run(&["report", spec.to_str().unwrap()]);
        assert_eq!(a.status.code(), Some(0), "{name}: {}", stderr(&a));
        assert_eq!(a.stdout, b.stdout, "{name}: reports differ");
    }
}

#[test]
fn exact_ising_classifies_as_candidate_with_lambda_e_minus_two() {
    let spec = gen("ising-12.json", &["ising", "--j1", "1", "--j2", "2", "--exact"]);
    let out = run(&["classify", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let c = &json(&out)["classification"];
    assert_eq!(c["verdict"], "iii_lambda_candidate");
    assert_eq!(c["generator_exact"], "2");
    assert_eq!(c["stabilized"], true);
    assert!((c["lambda"].as_f64().unwrap() - (-2.0f64).exp()).abs() < 1e-15);
    assert!(stderr(&out).contains("λ = e^{-2}"));
}

#[test]
fn float_flag_gives_the_same_generator() {
    let spec = gen("ising-12f.json", &["ising", "--j1", "1", "--j2", "2", "--exact"]);
    let out = run(&["classify", spec.to_str().unwrap(), "--float"]);
    let c = &json(&out)["classification"];
    assert_eq!(c["mode"], "float");
    assert!((c["generator"].as_f64().unwrap() - 2.0).abs() < 1e-9);
}

#[test]
fn irrational_couplings_are_indeterminate_with_caveat() {
    let root2 = std::f64::consts::SQRT_2.to_string();
    let spec = gen("ising-r2.json", &["ising", "--j1", "1", "--j2", &root2]);
    let out = run(&["classify", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let c = &json(&out)["classification"];
    assert_eq!(c["verdict"], "indeterminate_irrational");
    let ratio = c["witness"]["ratio"].as_f64().unwrap();
    assert!((ratio - (1.0 + std::f64::consts::SQRT_2)).abs() < 1e-9);
    assert!(stderr(&out).contains("Finite windows only approximate the modular spectrum"));
}

#[test]
fn zero_couplings_are_tracial() {
    let spec = gen("ising-00.json", &["ising", "--j1", "0", "--j2", "0"]);
    let out = run(&["classify", spec.to_str().unwrap()]);
    assert_eq!(json(&out)["classification"]["verdict"], "tracial");
    assert!(stderr(&out).contains("tracial"));
}

#[test]
fn markov_lifting_recovers_its_transition_matrix() {
    let p = [[0.7, 0.3], [0.4, 0.6]];
    let spec = gen("markov.json", &["markov", "--matrix", "0.7,0.3;0.4,0.6"]);
    let out = run(&["diagonalize", spec.to_str().unwrap(), "--segment", "0", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let d = &json(&out)["diagonalization"];
    for step in d["label_transitions"].as_array().unwrap() {
        for (i, row) in step.as_array().unwrap().iter().enumerate() {
            for (j, v) in row.as_array().unwrap().iter().enumerate() {
                assert!((v.as_f64().unwrap() - p[i][j]).abs() < 1e-12);
            }
        }
    }
    assert!(stderr(&out).contains("0.700000  0.300000"));
}

#[test]
fn random_lifted_spec_diagonalizes_within_tolerance() {
    let spec = gen("random7.json", &["random", "--seed", "7", "--dims", "2,3", "--lifting"]);
    let out = run(&["diagonalize", spec.to_str().unwrap(), "--segment", "-1", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report = json(&out);
    let d = &report["diagonalization"];
    for key in ["certification", "state_deviation", "projectivity_deviation", "potential_restriction", "commuting_square"] {
        let v = d[key].as_f64().unwrap_or_else(|| panic!("{key} missing"));
        assert!(v <= 1e-10, "{key} = {v:e}");
    }
    assert!(report["markov_property"]["max_residual"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn oversized_dense_requests_are_refused() {
    let spec = gen("big.json", &["random", "--seed", "1", "--dims", "4"]);
    let out = run(&["build", spec.to_str().unwrap(), "--segment", "0", "9"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("dense"), "{}", stderr(&out));
    let out = run(&["build", spec.to_str().unwrap(), "--segment", "0", "9", "--block-path-only"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
}

#[test]
fn tolerance_file_overrides_the_defaults() {
    let spec = gen("tol.json", &["random", "--seed", "2", "--dims", "2"]);
    let tol = scratch("tight.json");
    std::fs::write(&tol, r#"{"dense_dim_limit": 4}"#).unwrap();
    let out = qmarkov()
        .env("QMARKOV_TOLERANCES", &tol)
        .args(["build", spec.to_str().unwrap(), "--segment", "0", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    std::fs::write(&tol, r#"{"no_such_tolerance": 1}"#).unwrap();
    let out = qmarkov()
        .env("QMARKOV_TOLERANCES", &tol)
        .args(["validate", spec.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn timing_is_opt_in() {
    let spec = gen("timing.json", &["ising", "--j1", "1", "--j2", "2"]);
    let plain = json(&run(&["build", spec.to_str().unwrap(), "--segment", "0", "2"]));
    assert!(plain.get("timing_ms").is_none());
    let timed = json(&run(&["--timing", "build", spec.to_str().unwrap(), "--segment", "0", "2"]));
    assert!(timed["timing_ms"]["state"].as_f64().is_some());
}

#[test]
fn dense_density_is_included_on_request() {
    let spec = gen("dense.json", &["ising", "--j1", "0.3", "--j2", "0.1"]);
    let out = run(&["build", spec.to_str().unwrap(), "--segment", "0", "1", "--dense-density"]);
    let rho = json(&out)["state"]["density"].clone();
    let rows = rho.as_array().unwrap();
    assert_eq!(rows.len(), 4);
    let trace: f64 = (0..4).map(|i| rows[i][i][0].as_f64().unwrap()).sum();
    assert!((trace - 1.0).abs() < 1e-12);
}
