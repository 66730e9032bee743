use morawetz_lab::conditions::{Constants, Mode};
use morawetz_lab::error::Error;
use morawetz_lab::harness::*;
use morawetz_lab::norms::NormBundle;
use proptest::prelude::*;
use std::path::Path;

fn scenario(name: &str) -> Scenario {
    Scenario::from_file(&bundled_scenarios_dir().join(format!("{name}.json"))).unwrap()
}

fn small_free() -> Scenario {
    let mut s = scenario("free-space");
    s.sweep = Sweep {
        lambdas: vec![-5.0, 0.0, 1.0, 5.0],
        epsilons: vec![1.0, 0.1],
    };
    s.source = SourceSpec::Gaussian { sigma: 1.0 };
    s
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn free_space_gaussian_sweep_passes_with_the_identity_constant() {
    let r = verify_estimate(&small_free(), false).unwrap();
    assert_eq!(r.records.len(), 8);
    assert_eq!(r.constants.main, 746496.0);
    for rec in &r.records {
        assert!(rec.pass, "{rec:?}");
        let main = rec.checks.iter().find(|c| c.name == "thesisA").unwrap();
        let f = rec.norms.as_ref().unwrap().f.ydot_dual;
        assert!((main.rhs - 746496.0 * f * f).abs() <= 1e-9 * main.rhs);
        assert!(main.ratio < 1e-3);
    }
    assert!(r.summary.pass);
    assert_eq!(r.exit_code(), EXIT_PASS);
}

#[test]
fn negative_branch_uses_lambdaneg_only() {
    let mut s = small_free();
    s.sweep = Sweep {
        lambdas: vec![-5.0],
        epsilons: vec![0.3],
    };
    let r = verify_estimate(&s, false).unwrap();
    let names: Vec<_> = r.records[0].checks.iter().map(|c| c.name.as_str()).collect();
    assert!(names.contains(&"lambdaneg"));
    assert!(!names.contains(&"lambdapos"));
    assert!(r.records[0].pass);
}

#[test]
fn bundled_free_space_exits_zero_and_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_scenario_file(
        &bundled_scenarios_dir().join("free-space.json"),
        &RunOptions {
            out_dir: Some(dir.path().into()),
            ..Default::default()
        },
    );
    assert_eq!(out.exit_code, 0, "{:?}", out.error);
    let csv = std::fs::read_to_string(dir.path().join("free-space.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), csv_header());
    assert_eq!(lines.count(), 24);
    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("free-space.json")).unwrap()).unwrap();
    assert_eq!(json["records"].as_array().unwrap().len(), 24);
    let leftovers: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().contains(".tmp"))
        .collect();
    assert!(leftovers.is_empty());
}

#[test]
fn trapped_ratio_stops_at_the_condition_stage() {
    let out = run_scenario_file(&bundled_scenarios_dir().join("trapped.json"), &RunOptions::default());
    assert_eq!(out.exit_code, EXIT_CONDITIONS);
    let msg = out.error.unwrap().to_string();
    assert!(msg.contains("Trapped"), "{msg}");
    assert!(out.report.is_none());
}

#[test]
fn malformed_configs_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("syntax.json", "{ \"name\": \"x\", \"preset\": "),
        (
            "unknown.json",
            r#"{ "name": "x", "preset": { "id": "identity" }, "colour": 1 }"#,
        ),
        (
            "both.json",
            r#"{ "name": "x", "preset": { "id": "identity" }, "coefficients": { "a": [[1,0,0],[0,1,0],[0,0,1]] } }"#,
        ),
        ("neither.json", r#"{ "name": "x" }"#),
        (
            "eps.json",
            r#"{ "name": "x", "preset": { "id": "identity" }, "sweep": { "lambdas": [1], "epsilons": [0] } }"#,
        ),
        (
            "scale.json",
            r#"{ "name": "x", "preset": { "id": "identity" }, "scale": -1 }"#,
        ),
        (
            "square.json",
            r#"{ "name": "x", "coefficients": { "a": [[1,0],[0,1]] } }"#,
        ),
        (
            "solver.json",
            r#"{ "name": "x", "preset": { "id": "identity" }, "solver": { "path": "spectral" } }"#,
        ),
    ];
    for (file, text) in cases {
        let p = write(dir.path(), file, text);
        let out = run_scenario_file(&p, &RunOptions::default());
        assert_eq!(out.exit_code, EXIT_CONFIG, "{file}");
        assert!(
            matches!(out.error, Some(Error::Config { .. })),
            "{file}: {:?}",
            out.error
        );
    }
    let missing = run_scenario_file(&dir.path().join("absent.json"), &RunOptions::default());
    assert_eq!(missing.exit_code, EXIT_CONFIG);
}

#[test]
fn config_errors_point_at_the_line() {
    let text = "{\n  \"name\": \"x\",\n  \"preset\": { \"id\": \"identity\" },\n  \"bogus\": true\n}";
    let err = Scenario::from_json(text, "cfg.json").unwrap_err().to_string();
    assert!(err.contains("cfg.json:4:"), "{err}");
}

#[test]
fn identical_config_and_seed_give_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let text = serde_json::to_string(&small_free()).unwrap();
    let p = write(dir.path(), "s.json", &text);
    let mut bytes = Vec::new();
    for k in 0..2 {
        let out_dir = dir.path().join(format!("out{k}"));
        std::fs::create_dir(&out_dir).unwrap();
        let out = run_scenario_file(
            &p,
            &RunOptions {
                out_dir: Some(out_dir.clone()),
                seed: Some(7),
                force: false,
            },
        );
        assert_eq!(out.exit_code, 0);
        bytes.push((
            std::fs::read(out_dir.join("free-space.json")).unwrap(),
            std::fs::read(out_dir.join("free-space.csv")).unwrap(),
        ));
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn force_still_refuses_an_undefined_constant() {
    let s = scenario("trapped");
    assert!(matches!(verify_estimate(&s, true), Err(Error::ConditionsFailed(_))));
}

#[test]
fn zero_source_gives_vanishing_sides() {
    let c = Constants {
        n: 3,
        delta: 0.5,
        big_n: 1.0,
        nu: 1.0,
        c_a: 0.0,
        c_b: 0.0,
        c_minus: 0.0,
        c_plus: 0.0,
        c_c: 0.0,
        c_i: 0.0,
    };
    let zero = SolvedNorms {
        v: NormBundle::default(),
        grad: NormBundle::default(),
        f: NormBundle::default(),
    };
    for mode in [Mode::Homogeneous, Mode::Nonhomogeneous] {
        let k = EstimateConstants::new(&c, Some(746496.0), mode).unwrap();
        for lambda in [-1.0, 0.0, 1.0] {
            let checks = estimate_checks(&k, lambda, 0.5, &zero, 0.0, true, true);
            assert!(checks.len() >= 5);
            for ch in checks {
                assert_eq!((ch.lhs, ch.rhs, ch.ratio), (0.0, 0.0, 0.0), "{}", ch.name);
                assert!(ch.pass);
            }
        }
    }
}

#[test]
fn nonhomogeneous_constants_follow_c_plus() {
    let c = Constants {
        n: 3,
        delta: 0.5,
        big_n: 1.0,
        nu: 1.0,
        c_a: 0.0,
        c_b: 0.0,
        c_minus: 0.0,
        c_plus: 2.0,
        c_c: 0.0,
        c_i: 0.0,
    };
    let k = EstimateConstants::new(&c, None, Mode::Nonhomogeneous).unwrap();
    assert_eq!((k.main, k.lambda, k.eps), (5e9, 2.5e11, 5e10));
    assert!(EstimateConstants::new(&c, None, Mode::Homogeneous).is_err());
}

#[test]
fn scenario_round_trips_through_json() {
    for name in ["free-space", "diag-n4", "near-identity-ball", "trapped"] {
        let s = scenario(name);
        let again = Scenario::from_json(&serde_json::to_string(&s).unwrap(), name).unwrap();
        assert_eq!(s, again);
    }
}

proptest! {
    #[test]
    fn inequality_passes_iff_within_slack(lhs in 0.0..10.0f64, rhs in 0.0..10.0f64, slack in 0.0..0.1f64) {
        let q = Inequality::new("q", lhs, rhs, slack);
        prop_assert_eq!(q.pass, lhs <= (1.0 + slack) * rhs);
        if rhs > 0.0 {
            prop_assert!((q.ratio - lhs / rhs).abs() <= 1e-12 * (1.0 + q.ratio));
        }
    }

    #[test]
    fn sweep_has_one_pair_per_combination(
        l in prop::collection::vec(-20.0..20.0f64, 0..6),
        e in prop::collection::vec(0.01..2.0f64, 0..5),
    ) {
        let pairs = Sweep { lambdas: l.clone(), epsilons: e.clone() }.pairs();
        prop_assert_eq!(pairs.len(), l.len() * e.len());
        for (i, (a, b)) in pairs.iter().enumerate() {
            prop_assert_eq!(*a, l[i / e.len()]);
            prop_assert_eq!(*b, e[i % e.len()]);
        }
    }

    #[test]
    fn scaled_source_is_a_dilation(s in 0.2..5.0f64, r in 0.0..10.0f64) {
        let f = SourceSpec::default();
        let lhs = f.radial(s)(r);
        let rhs = f.radial(1.0)(s * r) * (s * s);
        prop_assert!((lhs - rhs).norm() <= 1e-14 * (1.0 + rhs.norm()));
    }
}

#[test]
fn csv_columns_are_frozen_and_documented() {
    let frozen = [
        "scenario",
        "preset",
        "mode",
        "lambda",
        "eps",
        "v_xdot",
        "v_x",
        "v_ydot",
        "v_y",
        "grad_ydot",
        "grad_y",
        "f_ydot_dual",
        "f_y_dual",
        "lhs_main",
        "rhs_main",
        "ratio_main",
        "lhs_lambda",
        "rhs_lambda",
        "ratio_lambda",
        "lhs_eps",
        "rhs_eps",
        "ratio_eps",
        "aux_eps_ratio",
        "aux_lambda_ratio",
        "n",
        "big_n",
        "nu",
        "c_plus",
        "relative_residual",
        "iterations",
        "pass",
    ];
    assert_eq!(&CSV_COLUMNS[..frozen.len()], &frozen[..]);
    let readme = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../README.md")).unwrap();
    for col in CSV_COLUMNS {
        assert!(readme.contains(&format!("`{col}`")), "{col} missing from README");
    }
}
