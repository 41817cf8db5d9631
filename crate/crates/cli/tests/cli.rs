use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_block-ising");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).env_remove("BLOCK_ISING_OUT").args(args).output().unwrap()
}

fn write_instance(dir: &Path, body: &str) {
    fs::write(dir.join("inst.json"), body).unwrap();
}

const TWO_BLOCK: &str = r#"{"n": 64, "p": ["1/2", "1/2"], "k": [[1.0, 0.5], [0.5, 1.0]]}"#;
const SINGLE: &str = r#"{"n": 64, "p": [1.0], "k": [[1.0]]}"#;

#[test]
fn spectral_reports_critical_point_and_writes_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    write_instance(dir.path(), TWO_BLOCK);
    let out = run(dir.path(), &["spectral", "--instance", "inst.json", "--beta", "0.5", "--out", "o"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let line = String::from_utf8(out.stdout).unwrap();
    assert!(line.starts_with("beta_cr=1.333333333333"), "{line}");
    let sidecar: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("o/spectral.json")).unwrap()).unwrap();
    assert_eq!(sidecar["format_version"], 1);
    assert_eq!(sidecar["config"]["resolved_beta"], 0.5);
    assert_eq!(sidecar["model_hash"].as_str().unwrap().len(), 64);
    let csv = fs::read_to_string(dir.path().join("o/spectral.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "block,p,perron,eigenvalue");
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn mixing_is_deterministic_and_matches_exact_value() {
    let dir = tempfile::tempdir().unwrap();
    write_instance(dir.path(), SINGLE);
    let a = run(dir.path(), &["mixing", "--instance", "inst.json", "--beta-frac", "0.5", "--out", "a"]);
    let b = run(dir.path(), &["mixing", "--instance", "inst.json", "--beta-frac", "0.5", "--out", "b", "--threads", "1"]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(String::from_utf8_lossy(&a.stdout).trim(), "t_mix=273");
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(fs::read(dir.path().join("a/mixing.csv")).unwrap(), fs::read(dir.path().join("b/mixing.csv")).unwrap());
}

#[test]
fn couple_is_reproducible_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    write_instance(dir.path(), TWO_BLOCK);
    let args = |o: &'static str| ["couple", "--instance", "inst.json", "--beta-frac", "0.5", "--replicas", "40", "--seed", "7", "--out", o];
    assert!(run(dir.path(), &args("a")).status.success());
    assert!(run(dir.path(), &args("b")).status.success());
    assert_eq!(fs::read(dir.path().join("a/couple.csv")).unwrap(), fs::read(dir.path().join("b/couple.csv")).unwrap());
}

#[test]
fn missing_instance_exits_2_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["spectral", "--instance", "absent.json", "--beta", "1", "--out", "o"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("instance"));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn invalid_inputs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    write_instance(dir.path(), r#"{"n": 64, "p": [0.5, 0.5], "k": [[1.0, 0.5], [0.4, 1.0]]}"#);
    let asym = run(dir.path(), &["spectral", "--instance", "inst.json", "--beta", "1", "--out", "o"]);
    assert_eq!(asym.status.code(), Some(2));

    write_instance(dir.path(), SINGLE);
    let no_beta = run(dir.path(), &["landscape", "--instance", "inst.json", "--out", "o"]);
    assert_eq!(no_beta.status.code(), Some(2));
    let both = run(dir.path(), &["landscape", "--instance", "inst.json", "--beta", "1", "--beta-frac", "1", "--out", "o"]);
    assert_eq!(both.status.code(), Some(2));
    let cold_couple = run(dir.path(), &["couple", "--instance", "inst.json", "--beta", "1.5", "--out", "o"]);
    assert_eq!(cold_couple.status.code(), Some(2));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn ceiling_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    write_instance(dir.path(), SINGLE);
    let out = run(dir.path(), &["mixing", "--instance", "inst.json", "--beta", "0.5", "--ceiling", "10", "--out", "o"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn censored_exit_times_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    write_instance(dir.path(), SINGLE);
    let out = run(
        dir.path(),
        &["exit-time", "--instance", "inst.json", "--beta", "1.5", "--replicas", "5", "--horizon", "10", "--out", "o"],
    );
    assert_eq!(out.status.code(), Some(3));
    let csv = fs::read_to_string(dir.path().join("o/exit_time.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",10,true")));
}

#[test]
fn nonclt_and_landscape_summaries() {
    let dir = tempfile::tempdir().unwrap();
    write_instance(dir.path(), SINGLE);
    let out = run(dir.path(), &["nonclt", "--instance", "inst.json", "--n", "200", "--out", "o"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("Z=3.374010198"));
    let out = run(dir.path(), &["landscape", "--instance", "inst.json", "--beta", "1.2", "--out", "o"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("stable_states=2"));
    let csv = fs::read_to_string(dir.path().join("o/landscape.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "point,block,chi,kind");
}

#[test]
fn tv_curve_honours_start_and_stride() {
    let dir = tempfile::tempdir().unwrap();
    write_instance(dir.path(), TWO_BLOCK);
    let out = run(
        dir.path(),
        &["tv-curve", "--instance", "inst.json", "--beta", "0.4", "--start", "0,32", "--t-max", "50", "--stride", "10", "--out", "o"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("o/tv_curve.csv")).unwrap();
    let times: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(times, ["0", "10", "20", "30", "40", "50"]);
    let bad = run(dir.path(), &["tv-curve", "--instance", "inst.json", "--beta", "0.4", "--start", "1,32", "--t-max", "5", "--out", "p"]);
    assert_eq!(bad.status.code(), Some(2));
}
