use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn aae(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aae"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .output()
        .expect("spawn aae")
}

fn error_record(o: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&o.stderr);
    let line = stderr.lines().rev().find(|l| l.starts_with('{')).expect("json error line");
    serde_json::from_str(line).unwrap()
}

const SMALL: &[&str] = &[
    "entropy", "--layers", "2", "--iters", "15", "--trials", "2", "--shots", "50",
    "--qsvd-layers", "2", "--qsvd-iters", "30", "--qsvd-trials", "1", "--seed", "5",
];

#[test]
fn verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = aae(dir.path(), &["verify", "--json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let suites: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(suites.as_array().unwrap().len(), 5);
}

#[test]
fn encode_uniform_vector_converges() {
    let dir = tempfile::tempdir().unwrap();
    let o = aae(dir.path(), &["encode", "--vector", "0.5,0.5,0.5,0.5", "--layers", "3", "--iters", "300", "--trials", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let art: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("loader.json")).unwrap()).unwrap();
    let l = art["best"]["cost"]["l"].as_f64().unwrap();
    assert!(l < 1e-3, "L = {l}");
    assert_eq!(art["config"]["seed"], 0);
    assert_eq!(art["records"].as_array().unwrap().len(), 3);
}

#[test]
fn encode_then_qsvd_on_market_window() {
    let dir = tempfile::tempdir().unwrap();
    let o = aae(dir.path(), &["encode", "--term", "Dec 08", "--layers", "3", "--iters", "40", "--trials", "2", "--gradient", "exact"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let loader = dir.path().join("loader.json");
    let o = aae(dir.path(), &["qsvd", "--loader", loader.to_str().unwrap(), "--qsvd-iters", "100", "--qsvd-trials", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("qsvd.json")).unwrap()).unwrap();
    assert_eq!(r["stock_qubits"], 2);
    assert_eq!(r["time_qubits"], 2);
    assert!(r["entropy"].as_f64().unwrap() >= 0.0);
    assert!(r["config"]["iterations"] == 100);
}

#[test]
fn usage_error_exits_two_with_record() {
    let dir = tempfile::tempdir().unwrap();
    let o = aae(dir.path(), &["encode", "--layers", "many"]);
    assert_eq!(o.status.code(), Some(2));
    let rec = error_record(&o);
    assert_eq!(rec["exit_code"], 2);
    assert_eq!(rec["error"], "usage");

    let o = aae(dir.path(), &["encode", "--term", "Jun 31"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn domain_error_exits_one_with_record() {
    let dir = tempfile::tempdir().unwrap();
    let o = aae(dir.path(), &["encode", "--vector", "0,0,0,0", "--iters", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let rec = error_record(&o);
    assert_eq!(rec["exit_code"], 1);
    assert!(rec["message"].as_str().is_some_and(|m| !m.is_empty()));

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "Symbol,a,b,c\nX,1,2,-3\n").unwrap();
    let o = aae(dir.path(), &["entropy", "--data", bad.to_str().unwrap(), "--window", "2"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn entropy_is_reproducible_and_echoes_config() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut args = SMALL.to_vec();
    args.push("--svg");
    for d in [&a, &b] {
        let o = aae(d.path(), &args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["entropy.json", "entropy.csv", "entropy.svg", "entropy_costs.svg"] {
        let x = fs::read(a.path().join(f)).unwrap();
        let y = fs::read(b.path().join(f)).unwrap();
        assert!(x == y, "{f} differs between runs");
    }
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.path().join("entropy.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["seed"], 5);
    assert_eq!(report["config"]["layers"], 2);
    assert_eq!(report["terms"].as_array().unwrap().len(), 8);
    let csv = fs::read_to_string(a.path().join("entropy.csv")).unwrap();
    assert!(csv.starts_with("term,exact,aae,naive,overlap,L1,L2"));
    assert_eq!(csv.lines().count(), 9);
}
