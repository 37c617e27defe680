mod common;

use std::fs;
use std::path::PathBuf;

use common::corpus;
use gadgetsim::bench::generate;
use gadgetsim::cli::{run_cli, CSV_HEADER};
use gadgetsim::ir::{emit_circuit, parse_circuit};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("gadgetsim-test-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["gadgetsim"];
    argv.extend(args);
    let code = run_cli(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn generated_circuits_round_trip() {
    for spec in corpus() {
        let c = generate(&spec).unwrap().circuit;
        let text = emit_circuit(&c);
        assert_eq!(parse_circuit(&text).unwrap(), c, "{spec:?}");
        assert_eq!(emit_circuit(&generate(&spec).unwrap().circuit), text);
    }
}

#[test]
fn simulate_bell() {
    let path = scratch("bell.hqc");
    fs::write(&path, "qubits 2\nh 0\ncx 0 1\n").unwrap();
    let (code, out, err) = run(&["simulate", path.to_str().unwrap(), "--x", "00", "--threads", "2"]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out.trim(), "0.5");
    let (code, _, _) = run(&["simulate", path.to_str().unwrap(), "--x", "0"]);
    assert_eq!(code, 2);
}

#[test]
fn verify_grover() {
    let path = scratch("grover3.hqc");
    let (code, _, err) =
        run(&["bench", "--family", "grover-allneg", "--n", "3", "--rounds", "2", "--emit", path.to_str().unwrap(), "--no-sim"]);
    assert_eq!(code, 0, "{err}");
    let (code, out, err) = run(&["verify", path.to_str().unwrap(), "--x", "000"]);
    assert_eq!(code, 0, "{out}{err}");
    let diff: f64 = out.lines().last().unwrap().split_whitespace().last().unwrap().parse().unwrap();
    assert!(diff < 1e-8);
    let (code, out, _) = run(&["simulate", path.to_str().unwrap(), "--x", "000"]);
    assert_eq!(code, 0);
    let p: f64 = out.trim().parse().unwrap();
    assert!((p - 0.9453125).abs() < 1e-9);
}

#[test]
fn lower_prints_chi() {
    let path = scratch("mcx.hqc");
    fs::write(&path, "qubits 6\nx 0\nmcx [0,1,2,3,4] 5\nt 5\n").unwrap();
    let (code, out, err) = run(&["lower", path.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(out.lines().any(|l| l == "chi 4"), "{out}");
    assert!(out.lines().any(|l| l == "compensation 2^{7/2}"), "{out}");
    assert_eq!(out.lines().filter(|l| l.starts_with("slot ")).count(), 2);
}

#[test]
fn parse_errors_exit_two() {
    let path = scratch("bad.hqc");
    fs::write(&path, "qubits 2\ncx 0 0\nfoo 1\n").unwrap();
    let (code, _, err) = run(&["simulate", path.to_str().unwrap(), "--x", "00"]);
    assert_eq!(code, 2);
    assert!(err.contains("bad.hqc:2:"), "{err}");
}

#[test]
fn bench_appends_csv() {
    let path = scratch("rows.csv");
    let _ = fs::remove_file(&path);
    for k in [2, 3] {
        let k = k.to_string();
        let (code, _, err) =
            run(&["bench", "--family", "comparator", "--k", &k, "--csv", path.to_str().unwrap(), "--threads", "1"]);
        assert_eq!(code, 0, "{err}");
    }
    let text = fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], CSV_HEADER);
    assert!(lines[2].starts_with("comparator,7,3,,0,4,"), "{}", lines[2]);
}
