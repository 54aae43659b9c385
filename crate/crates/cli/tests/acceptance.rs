//! CLI-level acceptance: byte-identical report runs (criterion 8), the
//! full pipeline round trip through files, and the exit-code contract.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cubeadv"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_exit(out: &Output, code: i32, what: &str) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "{what}: stdout={} stderr={}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Criterion 8: two report sweeps with the same seed produce byte-identical
/// CSV and JSON, across separate process invocations.
#[test]
fn criterion_8_report_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let a = run_in(dir.path(), &["report", "--d-range", "200:2000:200", "--seed", "7", "--out", "a.csv"]);
    assert_exit(&a, 0, "first report run");
    let b = run_in(dir.path(), &["report", "--d-range", "200:2000:200", "--seed", "7", "--out", "b.csv"]);
    assert_exit(&b, 0, "second report run");

    let csv_a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let csv_b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(csv_a, csv_b, "CSV runs differ");
    let json_a = std::fs::read(dir.path().join("a.json")).unwrap();
    let json_b = std::fs::read(dir.path().join("b.json")).unwrap();
    assert_eq!(json_a, json_b, "JSON runs differ");

    let text = String::from_utf8(csv_a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 11, "header + 10 rows");
    assert_eq!(
        lines[0],
        "d,S,certifiedWeight,targetD5lnD,centralLemmaHolds,ratioLB"
    );
    println!("[acceptance] criterion 8 PASS: byte-identical report runs over d = 200..2000");
}

/// An empty range yields the header only.
#[test]
fn report_empty_range_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["report", "--d-range", "300:200:100", "--out", "e.csv"]);
    assert_exit(&out, 0, "empty-range report");
    let text = std::fs::read_to_string(dir.path().join("e.csv")).unwrap();
    assert_eq!(text, "d,S,certifiedWeight,targetD5lnD,centralLemmaHolds,ratioLB\n");
}

/// Dimensions where the weight certificate misses the target are reported,
/// not suppressed.
#[test]
fn report_includes_failing_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["report", "--d-range", "100:100:1", "--seed", "42", "--out", "f.csv"]);
    assert_exit(&out, 0, "report at d=100");
    let text = std::fs::read_to_string(dir.path().join("f.csv")).unwrap();
    let row = text.lines().nth(1).unwrap();
    assert!(row.starts_with("100,5,"), "row = {row}");
    assert!(row.contains(",false,"), "d=100 must report the failed check: {row}");
}

/// The whole pipeline through files, with every artifact re-read by verify.
#[test]
fn pipeline_files_round_trip_through_verify() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    let out = run_in(d, &["family", "--d", "3", "--kind", "warmup", "--out", "fam.json"]);
    assert_exit(&out, 0, "family");
    // identical config, identical bytes
    let out = run_in(d, &["family", "--d", "3", "--kind", "warmup", "--out", "fam2.json"]);
    assert_exit(&out, 0, "family rerun");
    assert_eq!(
        std::fs::read(d.join("fam.json")).unwrap(),
        std::fs::read(d.join("fam2.json")).unwrap()
    );
    let out = run_in(d, &["pack", "fam.json", "--eps", "1/9", "--out", "pack.json"]);
    assert_exit(&out, 0, "pack");
    let out = run_in(d, &["instance", "pack.json", "--M", "2", "--scale", "full", "--out", "inst.txt"]);
    assert_exit(&out, 0, "instance");

    let inst = std::fs::read_to_string(d.join("inst.txt")).unwrap();
    assert_eq!(inst, "d=3 eps=1/9 M=2 mult=8\n2 32\n3 128\n");

    let out = run_in(d, &["simulate", "inst.txt", "--alg", "classnextfit", "--mode", "counted", "--out", "sim.json"]);
    assert_exit(&out, 0, "simulate");
    let sim = std::fs::read_to_string(d.join("sim.json")).unwrap();
    assert!(sim.contains("\"totalBins\": \"48\""));
    assert!(sim.contains("\"offlineBound\": \"32\""));
    assert!(sim.contains("\"universalLB\": \"44\""));
    assert!(sim.contains("\"ratio\": \"3/2\""));

    for file in ["fam.json", "pack.json", "inst.txt", "sim.json"] {
        let out = run_in(d, &["verify", file]);
        assert_exit(&out, 0, &format!("verify {file}"));
    }

    // the JSON mirror of the instance is equivalent input
    let out = run_in(d, &["instance", "pack.json", "--M", "2", "--scale", "full", "--json", "--out", "inst.json"]);
    assert_exit(&out, 0, "instance --json");
    let out = run_in(d, &["verify", "inst.json"]);
    assert_exit(&out, 0, "verify inst.json");
    let out = run_in(d, &["simulate", "inst.json", "--out", "sim2.json"]);
    assert_exit(&out, 0, "simulate from JSON mirror");
    assert_eq!(
        std::fs::read_to_string(d.join("sim.json")).unwrap(),
        std::fs::read_to_string(d.join("sim2.json")).unwrap()
    );

    // per-item cross-check flag produces the identical report
    let out = run_in(d, &["simulate", "inst.txt", "--mode", "peritem", "--validate-bins", "--out", "sim3.json"]);
    assert_exit(&out, 0, "simulate per-item");
    assert_eq!(
        std::fs::read_to_string(d.join("sim.json")).unwrap(),
        std::fs::read_to_string(d.join("sim3.json")).unwrap()
    );

    println!("[acceptance] pipeline PASS: family -> pack -> instance -> simulate -> verify");
}

/// Exit codes: 0 ok, 2 retries exhausted, 3 validation, 4 exactness,
/// 5 usage.
#[test]
fn exit_code_contract() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    let out = run_in(d, &["family", "--d", "1"]);
    assert_exit(&out, 5, "d below 2 is a usage error");

    let out = run_in(d, &["family", "--d", "1000", "--seed", "42", "--max-retries", "1", "--out", "f.json"]);
    assert_exit(&out, 2, "seed 42 needs a resample at d=1000; one attempt exhausts");

    // probabilistic d=1000 gives a lower-bound packing: instances need
    // exact counts
    let out = run_in(d, &["family", "--d", "1000", "--seed", "42", "--out", "fam1000.json"]);
    assert_exit(&out, 0, "family d=1000");
    let out = run_in(d, &["pack", "fam1000.json", "--out", "pack1000.json"]);
    assert_exit(&out, 0, "pack d=1000");
    let pack_json = std::fs::read_to_string(d.join("pack1000.json")).unwrap();
    assert!(pack_json.contains("\"mode\": \"counted\""));
    assert!(pack_json.contains("\"weightKind\": \"lowerBound\""));
    let out = run_in(d, &["instance", "pack1000.json", "--M", "1"]);
    assert_exit(&out, 4, "lower-bound packing rejected for instances");

    let out = run_in(d, &["family", "--d", "3", "--kind", "warmup", "--out", "fam.json"]);
    assert_exit(&out, 0, "warmup family");
    let out = run_in(d, &["pack", "fam.json", "--eps", "1/2"]);
    assert_exit(&out, 5, "eps above S^-2 is a usage error");

    let out = run_in(d, &["pack", "fam.json", "--out", "pack.json"]);
    assert_exit(&out, 0, "pack");
    let out = run_in(d, &["instance", "pack.json", "--M", "1", "--out", "inst.txt"]);
    assert_exit(&out, 0, "instance");
    let out = run_in(d, &["simulate", "inst.txt", "--alg", "no-such-algorithm"]);
    assert_exit(&out, 5, "unknown algorithm");

    // a tampered artifact fails verification
    let packing = std::fs::read_to_string(d.join("pack.json")).unwrap();
    let tampered = packing.replace("\"3/2\"", "\"2/1\"");
    assert_ne!(packing, tampered);
    std::fs::write(d.join("bad.json"), tampered).unwrap();
    let out = run_in(d, &["verify", "bad.json"]);
    assert_exit(&out, 3, "tampered packing");

    let out = run_in(d, &["verify", "does-not-exist.json"]);
    assert_exit(&out, 1, "missing file");

    // caps are honored and violations are usage errors
    let out = run_in(d, &["pack", "fam.json", "--mode", "materialized", "--caps", "explicitWords=2"]);
    assert_exit(&out, 5, "explicit cap exceeded");
    let out = run_in(d, &["pack", "fam.json", "--caps", "bogusKey=1"]);
    assert_exit(&out, 5, "unknown caps key");

    println!("[acceptance] exit codes PASS: 0/2/3/4/5 as contracted");
}

/// The documented precision override is accepted and leaves desk-scale
/// outputs stable.
#[test]
fn precision_env_var_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .current_dir(dir.path())
        .env("CUBEADV_PRECISION_BITS", "256")
        .args(["report", "--d-range", "200:200:100", "--seed", "7", "--out", "hp.csv"])
        .output()
        .unwrap();
    assert_exit(&out, 0, "report with precision override");
    let text = std::fs::read_to_string(dir.path().join("hp.csv")).unwrap();
    assert!(text.lines().count() == 2);
}
