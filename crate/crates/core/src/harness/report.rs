use super::{EstimateRecord, ScenarioReport};
use crate::error::Result;
use crate::solver::io::write_atomic;
use std::path::{Path, PathBuf};

/// CSV columns, one row per `(λ, ε)`. New columns are only ever appended.
pub const CSV_COLUMNS: [&str; 31] = [
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

pub fn csv_header() -> String {
    CSV_COLUMNS.join(",")
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:e}")
    } else {
        "nan".into()
    }
}

fn check_field(r: &EstimateRecord, prefixes: &[&str], pick: impl Fn(&super::Inequality) -> f64) -> String {
    r.checks
        .iter()
        .find(|c| prefixes.iter().any(|p| c.name == *p))
        .map(|c| num(pick(c)))
        .unwrap_or_default()
}

pub fn csv_rows(report: &ScenarioReport) -> Vec<Vec<String>> {
    let s = &report.scenario;
    let k = &report.constants;
    let mode = match k.mode {
        crate::conditions::Mode::Homogeneous => "homogeneous",
        crate::conditions::Mode::Nonhomogeneous => "nonhomogeneous",
    };
    report
        .records
        .iter()
        .map(|r| {
            let nb = |f: &dyn Fn(&super::SolvedNorms) -> f64| r.norms.as_ref().map(f).map(num).unwrap_or_default();
            let main = ["thesisA", "thesisB"];
            let lam = ["thesisA2-lambda", "thesisB2-lambda"];
            let eps = ["thesisA2-eps", "thesisB2-eps"];
            let aux_eps = ["epsest", "epsestbis"];
            let aux_lam = ["lambdapos", "lambdaneg", "lambdaposbis", "lambdanegbis"];
            let max_aux_lam = r
                .checks
                .iter()
                .filter(|c| aux_lam.contains(&c.name.as_str()))
                .map(|c| c.ratio)
                .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
            vec![
                s.name.clone(),
                s.preset_id(),
                mode.to_string(),
                num(r.lambda),
                num(r.eps),
                nb(&|n| n.v.xdot),
                nb(&|n| n.v.x),
                nb(&|n| n.v.ydot),
                nb(&|n| n.v.y),
                nb(&|n| n.grad.ydot),
                nb(&|n| n.grad.y),
                nb(&|n| n.f.ydot_dual),
                nb(&|n| n.f.y_dual),
                check_field(r, &main, |c| c.lhs),
                check_field(r, &main, |c| c.rhs),
                check_field(r, &main, |c| c.ratio),
                check_field(r, &lam, |c| c.lhs),
                check_field(r, &lam, |c| c.rhs),
                check_field(r, &lam, |c| c.ratio),
                check_field(r, &eps, |c| c.lhs),
                check_field(r, &eps, |c| c.rhs),
                check_field(r, &eps, |c| c.ratio),
                check_field(r, &aux_eps, |c| c.ratio),
                max_aux_lam.map(num).unwrap_or_default(),
                k.n.to_string(),
                num(k.big_n),
                num(k.nu),
                num(k.c_plus),
                num(r.relative_residual),
                r.iterations.to_string(),
                r.pass.to_string(),
            ]
        })
        .collect()
}

/// Writes `<name>.json` and `<name>.csv` into `dir`, each through a temporary file.
pub fn write_reports(report: &ScenarioReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let base = report
        .scenario
        .name
        .replace(|c: char| !c.is_ascii_alphanumeric() && c != '-' && c != '_', "_");
    let json_path = dir.join(format!("{base}.json"));
    let csv_path = dir.join(format!("{base}.csv"));
    let mut json = serde_json::to_vec_pretty(report)?;
    json.push(b'\n');
    write_atomic(&json_path, &json)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS)?;
    for row in csv_rows(report) {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    write_atomic(&csv_path, &bytes)?;
    Ok(vec![json_path, csv_path])
}
