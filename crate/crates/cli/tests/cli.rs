use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hamforge"));
    c.env_remove("HAMFORGE_SEED");
    c
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("hamforge-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(p: impl AsRef<Path>) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn compile_writes_circuits_reports_and_a_manifest() {
    let d = scratch("compile");
    let o = run(&["compile", "--model", "H2", "--t", "1", "--out", s(&d)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(d.join("cost_report.json"));
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["table"].as_array().unwrap().len(), 7);
    assert_eq!(report["totals"]["rotations"], 7);
    let m = json(d.join("manifest.json"));
    assert_eq!(m["status"], "ok");
    let outputs: Vec<&str> = m["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(outputs.len(), 9);
    for p in &outputs {
        assert!(Path::new(p).is_file(), "{p}");
    }
    let dumps = std::fs::read_dir(d.join("circuits")).unwrap().count();
    assert_eq!(dumps, 7);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("XYYX, YXXY, -YYXX, -XXYY"));
}

#[test]
fn heis6_table_collapses_field_terms() {
    let d = scratch("heis6");
    let o = run(&["compile", "--model", "heis6", "--seed", "7", "--out", s(&d)]);
    assert_eq!(code(&o), 0);
    let table = json(d.join("cost_report.json"))["table"].clone();
    let pairs: Vec<(u64, u64)> = table
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["rotations"].as_u64().unwrap(), r["toffoli_pairs"].as_u64().unwrap()))
        .collect();
    assert_eq!(pairs, vec![(2, 3), (2, 3), (2, 3), (1, 0)]);
    assert_eq!(table[3]["count"], 6);
}

#[test]
fn empty_hamiltonian_is_an_input_error() {
    let d = scratch("empty");
    let h = d.join("empty.txt");
    std::fs::write(&h, "").unwrap();
    let out = d.join("out");
    let o = run(&["compile", "--hamiltonian", s(&h), "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    let m = json(out.join("manifest.json"));
    assert_eq!(m["status"], "failed");
    assert_eq!(m["exit_code"], 2);
    assert!(m["outputs"].as_array().unwrap().is_empty());

    let o = run(&["compile", "--model", "H3", "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    assert_eq!(code(&run(&["compile", "--nope"])), 2);
}

#[test]
fn hamiltonian_files_go_through_the_allocation() {
    let d = scratch("file");
    let h = d.join("h.txt");
    std::fs::write(&h, "0.5 XX\n0.3 YY\n-0.2 ZZ\n0.1 XI\n0.7 II\n").unwrap();
    let out = d.join("out");
    let o = run(&["compile", "--hamiltonian", s(&h), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let alloc = json(out.join("allocation.json"));
    assert!(alloc["trace"].as_array().is_some());
    assert!(alloc["residual"].as_array().unwrap().iter().any(|t| t[1] == "II"));

    let v = d.join("verify");
    let o = run(&["verify", "--grouping", s(&out.join("allocation.json")), "--hamiltonian", s(&h), "--out", s(&v)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn verify_passes_on_builtin_models() {
    let d = scratch("verify");
    let o = run(&["verify", "--model", "heis4", "--trials", "20", "--out", s(&d)]);
    assert_eq!(code(&o), 0);
    let r = json(d.join("report.json"));
    assert_eq!(r["status"], "pass");
    for f in r["fragments"].as_array().unwrap() {
        assert_eq!(f["trials"].as_array().unwrap().len(), 20);
        assert!(f["max_deviation"].as_f64().unwrap() < 1e-9);
    }
}

#[test]
fn corrupted_groupings_name_the_fragment() {
    let d = scratch("corrupt");
    let base = run(&["compile", "--model", "H2", "--out", s(&d.join("c"))]);
    assert_eq!(code(&base), 0);
    let text = std::fs::read_to_string(d.join("c/allocation.json")).unwrap();

    let mut g: Value = serde_json::from_str(&text).unwrap();
    let scale = g["groups"][2]["scale"].as_f64().unwrap();
    g["groups"][2]["scale"] = (scale * 1.5).into();
    let bad = d.join("scaled.json");
    std::fs::write(&bad, g.to_string()).unwrap();
    let o = run(&["verify", "--grouping", s(&bad), "--out", s(&d.join("v1"))]);
    assert_eq!(code(&o), 3);
    let r = json(d.join("v1/report.json"));
    assert_eq!(r["status"], "fail");
    let named = r["reconstruction_mismatches"][0]["fragments"][0].as_str().unwrap();
    assert_eq!(named, "XYYX, YXXY, -YYXX, -XXYY");
    assert!(String::from_utf8_lossy(&o.stderr).contains("XYYX, YXXY, -YYXX, -XXYY"));

    let mut g: Value = serde_json::from_str(&text).unwrap();
    g["groups"][2]["members"][0][1] = "XYYZ".into();
    let bad = d.join("noncommuting.json");
    std::fs::write(&bad, g.to_string()).unwrap();
    let o = run(&["verify", "--grouping", s(&bad), "--out", s(&d.join("v2"))]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("XYYX, YXXY, -YYXX, -XXYY"));
    assert_eq!(json(d.join("v2/manifest.json"))["status"], "failed");

    let bad = d.join("broken.json");
    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(code(&run(&["verify", "--grouping", s(&bad), "--out", s(&d.join("v3"))])), 2);
}

#[test]
fn degenerate_sweep_is_valid() {
    let d = scratch("sweep1");
    let csv = d.join("s.csv");
    let o = run(&["sweep", "--model", "heis4", "--M", "1", "--K", "2", "--Ns", "4,8,16", "--out", s(&csv)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "N,mode,error,rotations,toffoli_pairs");
    assert_eq!(lines.len(), 1 + 3 * 2);
    for l in &lines[1..] {
        let e: f64 = l.split(',').nth(2).unwrap().parse().unwrap();
        assert!(e.is_finite() && e >= 0.0);
    }
    let summary = json(d.join("s.summary.json"));
    assert_eq!(summary["schema_version"], 1);
    assert!(json(d.join("manifest.json"))["outputs"].as_array().unwrap().len() == 2);
}

#[test]
fn sweeps_are_reproducible_across_job_counts() {
    let d = scratch("repro");
    let args = |out: &Path, jobs: &str| {
        let o = run(&["--jobs", jobs, "sweep", "--model", "H2", "--seed", "3", "--Ns", "4,16", "--M", "10", "--K", "3", "--out", s(out)]);
        assert_eq!(code(&o), 0);
    };
    args(&d.join("a/s.csv"), "1");
    args(&d.join("b/s.csv"), "2");
    for f in ["s.csv", "s.summary.json"] {
        assert_eq!(
            std::fs::read(d.join("a").join(f)).unwrap(),
            std::fs::read(d.join("b").join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn oversized_sweeps_hit_the_guard() {
    let d = scratch("guard");
    let h = d.join("big.txt");
    std::fs::write(&h, "1 ZZZZZZZZZ\n0.5 XIIIIIIII\n").unwrap();
    let o = run(&["sweep", "--hamiltonian", s(&h), "--Ns", "4", "--M", "1", "--K", "1", "--out", s(&d.join("s.csv"))]);
    assert_eq!(code(&o), 4);
    assert_eq!(json(d.join("manifest.json"))["exit_code"], 4);
}

#[test]
fn bounds_plug_in_values() {
    let d = scratch("bounds");
    let o = run(&["bounds", "--lambda", "1", "--t", "1", "--N", "10", "--delta", "0", "--out", s(&d)]);
    assert_eq!(code(&o), 0);
    let b = json(d.join("bounds.json"));
    assert!((b["epsilon_q"].as_f64().unwrap() - 0.02).abs() < 1e-15);
    assert!(b["bound_mult"].is_null());

    let o = run(&["bounds", "--lambda-prime", "1", "--t", "1", "--N", "2", "--out", s(&d)]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(d.join("bounds.json"))["bound_mult"], 1.0);

    let o = run(&["bounds", "--model", "H2", "--out", s(&d)]);
    assert_eq!(code(&o), 0);
    let b = json(d.join("bounds.json"));
    for k in ["lambda", "lambda_prime", "bound_mult", "bound_trunc", "expected_rotations"] {
        assert!(!b[k].is_null(), "{k}");
    }
    assert!(b["lambda"].as_f64().unwrap() < b["lambda_prime"].as_f64().unwrap());
    assert_eq!(code(&run(&["bounds", "--out", s(&d)])), 2);
}

#[test]
fn config_files_supply_flags_and_lose_to_the_command_line() {
    let d = scratch("config");
    let cfg = d.join("run.cfg");
    let out = d.join("s.csv");
    std::fs::write(&cfg, format!("# sweep settings\nmodel = heis4\nM = 3\nK = 1\nNs = 4,8\nout = {}\n", s(&out))).unwrap();
    let o = run(&["--config", s(&cfg), "sweep", "--M", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = json(d.join("manifest.json"));
    assert_eq!(m["config"]["M"], 2);
    assert_eq!(m["config"]["K"], 1);
    assert_eq!(m["config"]["Ns"], "4,8");
}

#[test]
fn seed_falls_back_to_the_environment() {
    let d = scratch("env");
    let o = bin()
        .args(["bounds", "--model", "heis4", "--out", s(&d)])
        .env("HAMFORGE_SEED", "9")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(json(d.join("manifest.json"))["seed"], 9);
}
