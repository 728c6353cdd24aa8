use std::path::Path;
use std::process::Command;

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_hqft");

fn config(name: &str) -> String {
    format!("{}/configs/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> (i32, Value) {
    let out = Command::new(BIN).args(args).output().unwrap();
    let code = out.status.code().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    (code, serde_json::from_str(&text).unwrap_or(Value::Null))
}

#[test]
fn qft_verify() {
    let (code, r) = run(&["qft-verify", "--dims", "2,2,3"]);
    assert_eq!(code, 0);
    assert!(r["metrics"]["max_error"].as_f64().unwrap() <= 1e-12);
    assert_eq!(run(&["qft-verify", "--dims", "2"]).0, 0);
    assert_eq!(run(&["qft-verify", "--dims", "1,2"]).0, 2);
    assert_eq!(run(&["qft-verify"]).0, 2);
}

#[test]
fn qft_verify_writes_the_circuit() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("qft.txt");
    let (code, _) = run(&["qft-verify", "--dims", "2,2,3", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&out).unwrap();
    let c = hybrid_qft::circuit::Circuit::from_text(&text).unwrap();
    assert_eq!(c.gates().len(), 6);
}

#[test]
fn spectrum_line_counts() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let csv = csv.to_str().unwrap();
    let (code, r) = run(&["spectrum", "--config", &config("ideal_emulator.toml"), "--out", csv, "--expect-lines", "20"]);
    assert_eq!(code, 0);
    assert_eq!(r["metrics"]["lines"], 20);
    assert_eq!(std::fs::read_to_string(csv).unwrap().lines().count(), 21);
    let (_, r) = run(&["spectrum", "--config", &config("ideal_emulator.toml"), "--no-merge"]);
    assert_eq!(r["metrics"]["lines"], 32);
    let (_, r) = run(&["spectrum", "--config", &config("generic_qqqq.toml")]);
    assert_eq!(r["metrics"]["lines"], 32);
    let (_, r) = run(&["spectrum", "--config", &config("qqt.toml"), "--out", csv]);
    assert_eq!(r["metrics"]["lines"], 20);
    let qutrit: Vec<String> = std::fs::read_to_string(csv).unwrap().lines().filter(|l| l.contains(",T ")).map(str::to_string).collect();
    assert_eq!(qutrit.len(), 8);
    assert!(qutrit.iter().all(|l| l.split(',').nth(1) == Some("2")));
    assert_eq!(run(&["spectrum", "--config", &config("ideal_emulator.toml"), "--expect-lines", "32"]).0, 1);
}

#[test]
fn bad_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    std::fs::write(&p, "kind = \"QQQQ\"\nlarmor = [1.0, 2.0, 3.0]\nj = [[0.0]]\n").unwrap();
    let out = Command::new(BIN).args(["spectrum", "--config", p.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("larmor") || err.contains("`j`"), "{err}");
    assert_eq!(run(&["spectrum", "--config", "/nonexistent/x.toml"]).0, 3);
}

#[test]
fn pulse_and_negative_control() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("seq.txt");
    let (code, r) = run(&["pulse", "--out", seq.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(r["metrics"]["process_fidelity"].as_f64().unwrap() >= 0.999);
    let golden = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("golden/qft_sequence.txt")).unwrap();
    assert_eq!(std::fs::read_to_string(&seq).unwrap(), golden);
    let (code, r) = run(&["pulse", "--faulty-echoes"]);
    assert_eq!(code, 1);
    assert!(r["metrics"]["process_fidelity"].as_f64().unwrap() < 0.999);
    assert_eq!(run(&["pulse", "--config", &config("generic_qqqq.toml")]).0, 2);
}

#[test]
fn tomography_round_trips() {
    let (code, r) = run(&["tomo-roundtrip", "--seed", "7", "--jobs", "4"]);
    assert_eq!(code, 0);
    assert_eq!(r["metrics"]["rank"]["determined"], 143);
    assert!(r["metrics"]["max_error"].as_f64().unwrap() <= 1e-6);
    let (_, serial) = run(&["tomo-roundtrip", "--seed", "7"]);
    assert_eq!(r, serial);
    let (code, r) = run(&["tomo-roundtrip", "--system", "qqqq", "--states", "3"]);
    assert_eq!(code, 0);
    assert!(r["metrics"]["max_error"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn full_pipeline_writes_both_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let (code, r) = run(&["full-pipeline", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(r["metrics"]["deviation_fidelity"].as_f64().unwrap() >= 0.999);
    for name in ["rho_theory.txt", "rho_expt.txt"] {
        let (m, dims) = hybrid_qft::tomography::read_matrix(&std::fs::read_to_string(dir.path().join(name)).unwrap()).unwrap();
        assert_eq!(dims.as_slice(), [2, 2, 3]);
        assert_eq!(m.shape(), (12, 12));
    }
    let (code, _) = run(&["full-pipeline", "--faulty-echoes"]);
    assert_eq!(code, 1);
}

#[test]
fn timing_is_opt_in() {
    let (_, r) = run(&["qft-verify", "--dims", "2,3"]);
    assert!(r.get("wall_time_s").is_none());
    let (_, r) = run(&["qft-verify", "--dims", "2,3", "--timing"]);
    assert!(r["wall_time_s"].as_f64().is_some());
}

#[test]
fn report_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let (_, r) = run(&["qft-verify", "--dims", "3,2", "--report", path.to_str().unwrap()]);
    let file: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(r, file);
    for key in ["command", "inputs_digest", "pass", "checks", "metrics", "outputs"] {
        assert!(r.get(key).is_some(), "{key}");
    }
}
