use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_morawetz-lab"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/scenarios")
        .join(format!("{name}.json"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout_json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

#[test]
fn help_lists_every_subcommand() {
    let o = run(&["--help"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    for sub in [
        "check-conditions",
        "verify-identity",
        "norms",
        "solve",
        "verify-estimate",
        "run",
    ] {
        assert!(text.contains(sub), "{sub}");
    }
    for flag in ["--config", "--seed", "--out", "--force", "--json"] {
        assert!(text.contains(flag), "{flag}");
    }
}

#[test]
fn identity_preset_certifies_with_known_constants() {
    let o = run(&["check-conditions", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["pass"], true);
    assert_eq!(v["k"]["m0"].as_f64().unwrap(), 746496.0);
    assert!((v["k"]["k"].as_f64().unwrap() - 1.0 / 9.0).abs() < 1e-15);
}

#[test]
fn trapped_scenario_fails_at_the_condition_stage() {
    let s = scenario("trapped");
    let o = run(&["run", s.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Trapped"));
}

#[test]
fn malformed_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(
        &p,
        "{ \"name\": \"x\", \"preset\": { \"id\": \"identity\" }, \"sweep\": 3 }",
    )
    .unwrap();
    for sub in ["run", "verify-estimate", "solve"] {
        let o = run(&[sub, "--config", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{sub}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("config error"));
    }
    assert_eq!(run(&["run", "--bogus-flag"]).status.code(), Some(2));
}

#[test]
fn free_space_run_writes_reports_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario("free-space");
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("r{k}"));
        let o = run(&[
            "run",
            "--config",
            s.to_str().unwrap(),
            "--seed",
            "3",
            "--out",
            out.to_str().unwrap(),
            "--json",
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let v = stdout_json(&o);
        assert_eq!(v["records"].as_array().unwrap().len(), 24);
        outputs.push((o.stdout, std::fs::read(out.join("free-space.json")).unwrap()));
        let csv = std::fs::read_to_string(out.join("free-space.csv")).unwrap();
        assert_eq!(csv.lines().count(), 25);
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn solve_then_norms_of_the_stored_file() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario("free-space");
    let out = dir.path().to_str().unwrap();
    let o = run(&[
        "solve",
        "--config",
        s.to_str().unwrap(),
        "--lambda",
        "-1",
        "--eps",
        "0.3",
        "--out",
        out,
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let solved = stdout_json(&o);
    let file = dir.path().join("free-space_l-1_e0.3.helmsol");
    assert!(file.exists());
    let o = run(&["norms", "--input", file.to_str().unwrap(), "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let normed = stdout_json(&o);
    assert_eq!(normed["v"], solved["norms"]["v"]);
    assert_eq!(normed["grad"], solved["norms"]["grad"]);
}

#[test]
fn norms_append_csv_records() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    for field in ["gaussian", "ring"] {
        assert!(run(&["norms", "--field", field, "--out", out]).status.success());
    }
    let csv = std::fs::read_to_string(dir.path().join("norms.csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0].starts_with("source,channel,"));
    assert!(lines[3].starts_with("ring,v,"));
    assert_eq!(run(&["norms", "--field", "sawtooth"]).status.code(), Some(4));
}

#[test]
fn identity_suite_small_run_passes() {
    let o = run(&[
        "verify-identity",
        "--trials",
        "2",
        "--points",
        "50",
        "--seed",
        "5",
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["worst"]["points"], 100);
    assert!(v["worst"]["morid"].as_f64().unwrap() < 1e-7);
}
