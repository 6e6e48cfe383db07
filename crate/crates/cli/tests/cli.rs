use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cantor-dpp"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().arg("--out").arg(dir).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn theorem2_set(dir: &Path) -> String {
    let o = run(dir, &["construct", "--theta", "0.5", "--delta", "0.5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    dir.join("spec.json").to_str().unwrap().to_string()
}

#[test]
fn no_arguments_is_a_usage_error() {
    let o = bin().output().unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&run(dir.path(), &["jbounds", "--nope"])), 2);
}

#[test]
fn construct_hits_target_measure() {
    let dir = TempDir::new().unwrap();
    theorem2_set(dir.path());
    let m = read_json(&dir.path().join("construct.manifest.json"));
    let mc = m["results"]["measure_C"].as_f64().unwrap();
    assert!((mc - 0.5).abs() < 1e-12, "{mc}");
    assert_eq!(m["subcommand"], "construct");
    assert_eq!(m["spec_digest"].as_str().unwrap().len(), 64);
    let outputs: Vec<&str> = m["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(outputs, ["spec.json", "construct.manifest.json"]);
}

#[test]
fn reruns_are_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [a.path(), b.path()] {
        let spec = theorem2_set(dir);
        let o = run(dir, &["sample", "--set", &spec, "--reps", "40", "--nodes", "120", "--seed", "5"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["spec.json", "construct.manifest.json", "samples.csv", "sample_summary.json"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs");
    }
}

#[test]
fn invalid_spec_is_rejected() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"mode":"ratios","ratios":[1.5]}"#).unwrap();
    let o = run(dir.path(), &["fourier", "--set", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&run(dir.path(), &["gram", "--set", missing.to_str().unwrap(), "--window", "1", "--nodes", "10"])), 2);
}

#[test]
fn fourier_and_gram_outputs() {
    let dir = TempDir::new().unwrap();
    let spec = theorem2_set(dir.path());
    let o = run(dir.path(), &["fourier", "--set", &spec, "--which", "C", "--points", "12", "--svg"]);
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(dir.path().join("fourier.csv")).unwrap();
    assert!(csv.starts_with("xi,re,im,modulus,tail_radius\n"));
    assert_eq!(csv.lines().count(), 13);
    assert!(std::fs::read_to_string(dir.path().join("fourier.svg")).unwrap().starts_with("<svg"));

    let o = run(dir.path(), &["gram", "--set", &spec, "--window", "5", "--nodes", "150"]);
    assert_eq!(code(&o), 0);
    let g = read_json(&dir.path().join("gram.json"));
    assert!(g["lambda_min"].as_f64().unwrap() > -1e-10);
    assert!(g["lambda_max"].as_f64().unwrap() < 1.0 + 1e-10);
    let eig = std::fs::read_to_string(dir.path().join("eigenvalues.csv")).unwrap();
    assert_eq!(eig.lines().count(), 151);
}

#[test]
fn sample_outputs_have_headers() {
    let dir = TempDir::new().unwrap();
    let spec = theorem2_set(dir.path());
    let o = run(dir.path(), &["sample", "--set", &spec, "--reps", "30", "--nodes", "100"]);
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(dir.path().join("samples.csv")).unwrap();
    assert!(csv.starts_with("replicate,count,S_phi\n"));
    assert_eq!(csv.lines().count(), 31);
    let m = read_json(&dir.path().join("sample.manifest.json"));
    assert_eq!(m["parameters"]["reps"], 30);
}

#[test]
fn dump_levels_writes_intervals() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["construct", "--ratios", "0.3333333333333333", "--max-level", "6", "--dump-levels", "3"]);
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(dir.path().join("intervals.csv")).unwrap();
    // 1 + 2 + 4 removed intervals
    assert_eq!(csv.lines().count(), 8);
}

#[test]
fn jbounds_hold_at_default_radii() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["jbounds", "--radii", "11,101"]);
    assert_eq!(code(&o), 0);
    let m = read_json(&dir.path().join("jbounds.manifest.json"));
    for row in m["results"]["holds"].as_array().unwrap() {
        assert!(row.as_array().unwrap().iter().all(|b| b.as_bool().unwrap()));
    }
}

#[test]
fn verify_needs_a_delta() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["construct", "--ratios", "0.3", "--max-level", "8"]);
    assert_eq!(code(&o), 0);
    let spec = dir.path().join("spec.json");
    assert_eq!(code(&run(dir.path(), &["verify", "--set", spec.to_str().unwrap()])), 2);
}

#[test]
fn verify_passes_on_target_measure_set() {
    let dir = TempDir::new().unwrap();
    let spec = theorem2_set(dir.path());
    let o = run(dir.path(), &["verify", "--set", &spec, "--j-radii", "11", "--v-radii", "10,100"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read_json(&dir.path().join("verify.json"))["passes"], true);
}

#[test]
fn bad_thread_count_is_rejected() {
    let dir = TempDir::new().unwrap();
    let o = bin()
        .env("CANTOR_DPP_THREADS", "zero")
        .arg("--out")
        .arg(dir.path())
        .args(["jbounds", "--radii", "11"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}
