//! End-to-end verification: certify the coefficient hypotheses, solve over a
//! `(λ, ε)` sweep, compute the norms of each solution and assert the estimates.

mod config;
mod estimate;
mod report;

pub use config::{
    Assertions, ConstantCoefficients, DomainConfig, NormConfig, PresetRef, Scenario, SolverConfig, SourceSpec, Sweep,
};
pub use estimate::{
    estimate_checks, grid_norms, radial_norms, source_norms, EstimateConstants, Inequality, SolvedNorms,
};
pub use report::{csv_header, csv_rows, write_reports, CSV_COLUMNS};

use crate::conditions::{certify, ConditionReport, Mode};
use crate::error::{Error, Result};
use crate::fields::{CoefficientSet, DomainSpec};
use crate::norms::{NormBundle, RadialSource, ShellGrid};
use crate::solver::io::{SolutionHeader, StoredField};
use crate::solver::{solve_radial, GridProblem, PointSource, RadialSolveSpec, SolveOptions};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_ESTIMATE_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CONDITIONS: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

#[derive(Clone, Debug, Serialize)]
pub struct EstimateRecord {
    pub lambda: f64,
    pub eps: f64,
    pub norms: Option<SolvedNorms>,
    pub checks: Vec<Inequality>,
    pub relative_residual: f64,
    pub iterations: usize,
    pub truncation_warning: Option<String>,
    pub error: Option<String>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub records: usize,
    pub passed: usize,
    pub failed: usize,
    pub errors: usize,
    /// Largest `lhs/rhs` per inequality over the sweep.
    pub max_ratio: BTreeMap<String, f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScenarioReport {
    pub scenario: Scenario,
    pub conditions: ConditionReport,
    pub constants: EstimateConstants,
    pub forced: bool,
    pub records: Vec<EstimateRecord>,
    pub summary: Summary,
}

impl ScenarioReport {
    pub fn exit_code(&self) -> i32 {
        if self.summary.errors > 0 {
            EXIT_SOLVER
        } else if self.summary.pass {
            EXIT_PASS
        } else {
            EXIT_ESTIMATE_FAILED
        }
    }
}

/// Certifies the scenario's coefficients in its mode.
pub fn check_conditions(s: &Scenario) -> Result<(CoefficientSet, ConditionReport)> {
    let coeffs = s.coefficients()?;
    let report = certify(&coeffs, &s.domain.build(), s.mode, &s.conditions, false)?;
    Ok((coeffs, report))
}

fn condition_failure(report: &ConditionReport) -> Error {
    let mut why = Vec::new();
    if let Some(t) = &report.trapped {
        why.push(format!("Trapped ({t})"));
    }
    if report.mode == Mode::Homogeneous && !report.ratio.pass {
        why.push(format!(
            "ratio N/nu = {:.6} exceeds {:.6}",
            report.ratio.ratio, report.ratio.threshold
        ));
    }
    for c in report.smallness.iter().chain(std::iter::once(&report.positivity)) {
        if !c.pass && (report.mode == Mode::Homogeneous || c.name != report.positivity.name) {
            why.push(format!("{} fails ({:.4e} vs {:.4e})", c.name, c.lhs, c.rhs));
        }
    }
    if let Some(st) = &report.starshaped {
        if !st.pass {
            why.push(format!(
                "domain is not starshaped (worst a(x)x·nu = {:.4e})",
                st.worst_value
            ));
        }
    }
    if why.is_empty() {
        why.push("hypotheses not certified".into());
    }
    Error::ConditionsFailed(format!("{}: {}", report.preset, why.join("; ")))
}

fn record_from(
    lambda: f64,
    eps: f64,
    norms: Result<(SolvedNorms, f64, usize, Option<String>)>,
    k: &EstimateConstants,
    a: &Assertions,
) -> EstimateRecord {
    match norms {
        Ok((norms, res, it, warn)) => {
            let checks = estimate_checks(k, lambda, eps, &norms, a.slack, a.thesis, a.aux);
            let pass = checks.iter().all(|c| c.pass);
            EstimateRecord {
                lambda,
                eps,
                norms: Some(norms),
                checks,
                relative_residual: res,
                iterations: it,
                truncation_warning: warn,
                error: None,
                pass,
            }
        }
        Err(e) => EstimateRecord {
            lambda,
            eps,
            norms: None,
            checks: Vec::new(),
            relative_residual: f64::NAN,
            iterations: 0,
            truncation_warning: None,
            error: Some(e.to_string()),
            pass: false,
        },
    }
}

/// Runs the sweep. Without `force`, uncertified hypotheses abort with `ConditionsFailed`.
pub fn verify_estimate(s: &Scenario, force: bool) -> Result<ScenarioReport> {
    let (coeffs, conditions) = check_conditions(s)?;
    if !conditions.pass && !force {
        return Err(condition_failure(&conditions));
    }
    let k = EstimateConstants::new(&conditions.constants, conditions.k.as_ref().map(|k| k.m0), s.mode)?;
    let domain = s.domain.build();
    let scale = s.scale;
    let s2 = scale * scale;
    let f = s.source.radial(scale);
    let grid = &s.norms.grid;
    let fnorm = source_norms(coeffs.n, f.clone(), &domain, grid, s.norms.polar_nodes);
    let pairs: Vec<(f64, f64)> = s.sweep.pairs().into_iter().map(|(l, e)| (s2 * l, s2 * e)).collect();
    let records: Vec<EstimateRecord> = match &s.solver {
        SolverConfig::Radial { r_max, m } => {
            if !matches!(domain, DomainSpec::Whole | DomainSpec::Ball { .. }) {
                return Err(Error::InvalidInput(
                    "the radial path needs a whole-space or ball domain".into(),
                ));
            }
            let r0 = domain.ball_radius().unwrap_or(0.0);
            pairs
                .par_iter()
                .map(|&(lambda, eps)| {
                    let run = || -> Result<_> {
                        let spec =
                            RadialSolveSpec::from_coefficients(&coeffs, r0, r_max / scale, *m, lambda, eps, f.clone())?;
                        let out = solve_radial(&spec)?;
                        let (v, g) = radial_norms(&out.v, grid);
                        let norms = SolvedNorms {
                            v,
                            grad: g,
                            f: fnorm.clone(),
                        };
                        Ok((norms, out.relative_residual, out.iterations, out.truncation_warning))
                    };
                    record_from(lambda, eps, run(), &k, &s.assertions)
                })
                .collect()
        }
        SolverConfig::Grid {
            half_width,
            h,
            tol,
            restart,
            max_iter,
        } => {
            let problem = GridProblem::new(half_width / scale, h / scale, &coeffs, &domain)?;
            let fr = f.clone();
            let fp: PointSource = Arc::new(move |x: &[f64]| fr((x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()));
            let rhs = problem.sample(&fp);
            let opts = SolveOptions {
                tol: *tol,
                restart: *restart,
                max_iter: *max_iter,
            };
            pairs
                .par_iter()
                .map(|&(lambda, eps)| {
                    let run = || -> Result<_> {
                        let out = problem.solve(lambda, eps, &rhs, &opts)?;
                        let (v, g) = grid_norms(&out.v, &coeffs.b, &domain, grid, s.norms.polar_nodes);
                        let norms = SolvedNorms {
                            v,
                            grad: g,
                            f: fnorm.clone(),
                        };
                        Ok((norms, out.relative_residual, out.iterations, out.truncation_warning))
                    };
                    record_from(lambda, eps, run(), &k, &s.assertions)
                })
                .collect()
        }
    };
    let mut max_ratio: BTreeMap<String, f64> = BTreeMap::new();
    for c in records.iter().flat_map(|r| &r.checks) {
        let e = max_ratio.entry(c.name.clone()).or_insert(0.0);
        *e = e.max(c.ratio);
    }
    let errors = records.iter().filter(|r| r.error.is_some()).count();
    let passed = records.iter().filter(|r| r.pass).count();
    let summary = Summary {
        records: records.len(),
        passed,
        failed: records.len() - passed - errors,
        errors,
        max_ratio,
        pass: passed == records.len(),
    };
    Ok(ScenarioReport {
        scenario: s.clone(),
        conditions,
        constants: k,
        forced: force,
        records,
        summary,
    })
}

/// Solves the scenario at one `(λ, ε)`, already rescaled, on its configured path.
pub fn solve_single(s: &Scenario, lambda: f64, eps: f64) -> Result<(SolutionHeader, StoredField, Option<String>)> {
    let coeffs = s.coefficients()?;
    let domain = s.domain.build();
    let scale = s.scale;
    let f = s.source.radial(scale);
    let (field, res, it, warn) = match &s.solver {
        SolverConfig::Radial { r_max, m } => {
            let r0 = domain.ball_radius().unwrap_or(0.0);
            let spec = RadialSolveSpec::from_coefficients(&coeffs, r0, r_max / scale, *m, lambda, eps, f)?;
            let out = solve_radial(&spec)?;
            (
                StoredField::Radial(out.v),
                out.relative_residual,
                out.iterations,
                out.truncation_warning,
            )
        }
        SolverConfig::Grid {
            half_width,
            h,
            tol,
            restart,
            max_iter,
        } => {
            let problem = GridProblem::new(half_width / scale, h / scale, &coeffs, &domain)?;
            let fp: PointSource = Arc::new(move |x: &[f64]| f((x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()));
            let rhs = problem.sample(&fp);
            let opts = SolveOptions {
                tol: *tol,
                restart: *restart,
                max_iter: *max_iter,
            };
            let out = problem.solve(lambda, eps, &rhs, &opts)?;
            (
                StoredField::Grid(out.v),
                out.relative_residual,
                out.iterations,
                out.truncation_warning,
            )
        }
    };
    let header = SolutionHeader {
        layout: field.layout(),
        dims: field.dims(),
        lambda,
        eps,
        preset: s.preset_id(),
        relative_residual: res,
        iterations: it,
    };
    Ok((header, field, warn))
}

/// Norms of a stored solution and of its covariant gradient.
pub fn stored_norms(
    field: &StoredField,
    b: &crate::fields::VectorField,
    domain: &DomainSpec,
    norms: &NormConfig,
) -> (NormBundle, NormBundle) {
    match field {
        StoredField::Radial(p) => radial_norms(p, &norms.grid),
        StoredField::Grid(g) => grid_norms(g, b, domain, &norms.grid, norms.polar_nodes),
    }
}

/// Closed-form radial fields: `gaussian` is `e^{−r²}`, `ring` is `e^{−(r−2)²}`.
pub const FIELD_PRESETS: [&str; 2] = ["gaussian", "ring"];

/// Norms of a field preset and of its gradient in dimension `n`.
pub fn field_preset_norms(id: &str, n: usize, grid: &ShellGrid) -> Result<(NormBundle, NormBundle)> {
    let c = match id {
        "gaussian" => 0.0,
        "ring" => 2.0,
        _ => {
            return Err(Error::InvalidInput(format!(
                "unknown field preset {id:?}; expected one of {}",
                FIELD_PRESETS.join(", ")
            )))
        }
    };
    let src = RadialSource::new(
        n,
        vec![
            Box::new(move |r: f64| (-2.0 * (r - c) * (r - c)).exp()),
            Box::new(move |r: f64| 4.0 * (r - c) * (r - c) * (-2.0 * (r - c) * (r - c)).exp()),
        ],
    );
    let profile = crate::norms::ShellProfile::new(&src, grid);
    Ok((profile.bundle(0), profile.bundle(1)))
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub force: bool,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
}

pub struct RunOutcome {
    pub exit_code: i32,
    pub report: Option<ScenarioReport>,
    pub error: Option<Error>,
    pub written: Vec<PathBuf>,
}

pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::Json(_) => EXIT_CONFIG,
        Error::ConditionsFailed(_) | Error::Trapped { .. } => EXIT_CONDITIONS,
        _ => EXIT_SOLVER,
    }
}

/// Parses, runs and reports a scenario file; the exit code is 0 iff every asserted inequality passes.
pub fn run_scenario_file(path: &Path, opts: &RunOptions) -> RunOutcome {
    let fail = |e: Error| RunOutcome {
        exit_code: exit_code_for(&e),
        report: None,
        error: Some(e),
        written: Vec::new(),
    };
    let mut scenario = match Scenario::from_file(path) {
        Ok(s) => s,
        Err(e) => return fail(e),
    };
    if let Some(seed) = opts.seed {
        scenario.seed = seed;
    }
    let report = match verify_estimate(&scenario, opts.force) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let mut written = Vec::new();
    if let Some(dir) = &opts.out_dir {
        match write_reports(&report, dir) {
            Ok(w) => written = w,
            Err(e) => return fail(e),
        }
    }
    RunOutcome {
        exit_code: report.exit_code(),
        report: Some(report),
        error: None,
        written,
    }
}

/// Scenario files shipped with the crate.
pub fn bundled_scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}
