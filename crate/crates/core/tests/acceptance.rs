//! Acceptance suite: one pass/fail line per criterion. Exits nonzero if any fails.

use morawetz_lab::conditions::{certify, compute_k_m0, pointwise_case_a, CloudSpec, Mode, SampleCloud};
use morawetz_lab::fields::{
    presets, CoefficientSet, DomainSpec, Field, MatrixField, PotentialField, TestFunction, VectorField,
};
use morawetz_lab::harness::{
    bundled_scenarios_dir, run_scenario_file, verify_estimate, RunOptions, Scenario, ScenarioReport,
};
use morawetz_lab::jet::RJet;
use morawetz_lab::multiplier::{run_identity_suite, IdentitySuiteSpec};
use morawetz_lab::norms::lemmas::{lemma_suite, LemmaConfig};
use morawetz_lab::solver::{
    convergence_study, solve_3d, solve_radial, ComplexRadialFn, Grid3DSolveSpec, GridProblem, PointSource,
    RadialSolveSpec, SolveOptions, StudyPath,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::sync::Arc;
use std::time::Instant;

const IDENTITY_TOL: f64 = 1e-7;
const FD_TOL: f64 = 1e-6;
const LEMMA_SLACK: f64 = 1e-3;
const M0_IDENTITY: f64 = 746496.0;
const CASE_A_TOL: f64 = 1e-10;
const K_EXPR_TOL: f64 = 1e-14;
const RADIAL_ORDER: (f64, f64) = (1.8, 2.2);
const GRID_ORDER: (f64, f64) = (1.7, 2.3);
const DISSIPATION_TOL: f64 = 1e-6;
const GAUGE_FACTOR: f64 = 5.0;
const AGREEMENT_FACTOR: f64 = 5.0;
const ESTIMATE_SLACK: f64 = 0.02;
const SCALING_TOL: f64 = 0.02;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn ring() -> ComplexRadialFn {
    Arc::new(|r: f64| c((-(r - 2.0) * (r - 2.0)).exp(), 0.3 * (-r * r).exp()))
}

fn identities() -> Outcome {
    let spec = IdentitySuiteSpec {
        trials: 20,
        points: 1000,
        seed: 2024,
        ..Default::default()
    };
    match run_identity_suite(&spec) {
        Ok(r) => outcome(
            r.worst_identity() < IDENTITY_TOL && r.worst_fd() < FD_TOL && r.points == 20_000,
            format!(
                "{} points, worst residual id1 {:.1e} id2 {:.1e} morid {:.1e} morid2 {:.1e}, difference oracle {:.1e} over {} points",
                r.points, r.id1, r.id2, r.morid, r.morid2, r.worst_fd(), r.fd_points
            ),
        ),
        Err(e) => outcome(false, e.to_string()),
    }
}

fn lemmas() -> Outcome {
    let cfg = LemmaConfig {
        n: 3,
        trials: 100,
        slack: LEMMA_SLACK,
        ..Default::default()
    };
    match lemma_suite(&cfg, &VectorField::zero(3), &DomainSpec::Whole) {
        Ok(reports) => {
            let failed: Vec<_> = reports.iter().filter(|r| !r.pass).map(|r| r.name.clone()).collect();
            let worst = reports.iter().map(|r| r.worst_ratio).fold(0.0, f64::max);
            outcome(
                failed.is_empty(),
                format!(
                    "{} inequalities x 100 functions, worst lhs/rhs {worst:.4}, failing {failed:?}",
                    reports.len()
                ),
            )
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn conditions() -> Outcome {
    let run = || -> morawetz_lab::Result<(bool, String)> {
        let cloud = CloudSpec::default();
        let id = presets::build("identity", &Default::default())?;
        let r = certify(&id, &DomainSpec::Whole, Mode::Homogeneous, &cloud, false)?;
        let k = r.k.clone().expect("identity is not trapped");
        let c = &r.constants;
        let decay_zero = [c.c_a, c.c_b, c.c_minus, c.c_plus, c.c_c].iter().all(|v| *v == 0.0);
        let a = r.pass && decay_zero && (k.k - 1.0 / 9.0).abs() < 1e-15 && k.m0 == M0_IDENTITY;

        let n4 = presets::build("diag-n4-remark", &Default::default())?;
        let b = certify(&n4, &DomainSpec::Whole, Mode::Homogeneous, &cloud, false)?.pass;

        let mut worst_case_a: f64 = 0.0;
        for eps0 in [1e-3, 0.01, 0.05] {
            let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, 1.0 + eps0]));
            let pc = pointwise_case_a(
                &MatrixField::constant(&m),
                &SampleCloud::new(3, &cloud, &DomainSpec::Whole),
            )?;
            worst_case_a = worst_case_a.max((pc.min_value + 8.0 * eps0).abs());
        }
        let cc = worst_case_a <= CASE_A_TOL;

        let mut worst_k: f64 = 0.0;
        for n in 3..=12 {
            for nu in [0.25, 0.5, 1.0, 2.0, 7.5] {
                for t in [1.0, 1.05, 1.2, 1.5, 2.0] {
                    let big_n = t * nu;
                    if let Ok(k) = compute_k_m0(big_n, nu, n, 0.0) {
                        let direct = nu * nu * k.k0 / 9.0;
                        worst_k = worst_k.max((direct - k.k_third_alt).abs() / direct.abs().max(1.0));
                    }
                }
            }
        }
        let d = worst_k <= K_EXPR_TOL;
        Ok((
            a && b && cc && d,
            format!(
                "(a) K = {:.12}, M0 = {} {} (b) diag-n4 {} (c) |min + 8 eps0| = {worst_case_a:.1e} (d) K forms differ by {worst_k:.1e}",
                k.k, k.m0, a, b
            ),
        ))
    };
    match run() {
        Ok((p, d)) => outcome(p, d),
        Err(e) => outcome(false, e.to_string()),
    }
}

fn in_range(x: Option<f64>, (lo, hi): (f64, f64)) -> bool {
    x.is_some_and(|x| (lo..=hi).contains(&x))
}

fn gauged_coefficients(base: &CoefficientSet) -> morawetz_lab::Result<CoefficientSet> {
    let b = base.b.clone();
    let gauged_b = Field::analytic(
        3,
        3,
        Arc::new(move |xs: &[RJet]| {
            let bj = b.0.jets_at(xs);
            let cos = (&xs[0].scale(0.4) + &xs[1].mul_jet(&xs[2]).scale(0.2)).cos();
            let grad = [
                cos.scale(0.4),
                cos.mul_jet(&xs[2]).scale(0.2),
                cos.mul_jet(&xs[1]).scale(0.2),
            ];
            (0..3).map(|k| &bj[k] + &grad[k]).collect()
        }),
    );
    CoefficientSet::new(
        "gauged",
        0.5,
        base.a.clone(),
        VectorField(gauged_b),
        PotentialField::zero(3),
    )
}

fn solver() -> Outcome {
    let run = || -> morawetz_lab::Result<(bool, String)> {
        let mut notes = Vec::new();
        let mut pass = true;

        let id3 = CoefficientSet::identity(3, 0.5)?;
        let radial = convergence_study(
            &TestFunction::gaussian(3, 1.0),
            &id3,
            1.0,
            0.1,
            &StudyPath::Radial {
                r0: 0.0,
                r_max: 12.0,
                m0: 300,
            },
            3,
        )?;
        let n4 = presets::build("diag-n4-remark", &Default::default())?;
        let radial4 = convergence_study(
            &TestFunction::gaussian(4, 1.0),
            &n4,
            -1.0,
            0.3,
            &StudyPath::Radial {
                r0: 0.0,
                r_max: 12.0,
                m0: 300,
            },
            3,
        )?;
        let ok = in_range(radial.order, RADIAL_ORDER) && in_range(radial4.order, RADIAL_ORDER);
        pass &= ok;
        notes.push(format!(
            "radial order {:.3} (n=3), {:.3} (n=4)",
            radial.order.unwrap_or(f64::NAN),
            radial4.order.unwrap_or(f64::NAN)
        ));

        let variable = presets::near_identity_n3(0.5, 0.05, 0.05, 0.25)?;
        let grid = convergence_study(
            &TestFunction::gaussian(3, 1.0),
            &variable,
            1.0,
            0.5,
            &StudyPath::Grid {
                half_width: 8.0,
                h0: 0.25,
                domain: DomainSpec::Whole,
                options: SolveOptions::default(),
            },
            2,
        )?;
        pass &= in_range(grid.order, GRID_ORDER);
        notes.push(format!("3D order {:.3}", grid.order.unwrap_or(f64::NAN)));

        let mut worst_diss: f64 = 0.0;
        for (lambda, eps) in [(-5.0, 1.0), (1.0, 0.1), (20.0, 0.03)] {
            let spec = RadialSolveSpec::from_coefficients(&id3, 0.0, 12.0, 4000, lambda, eps, ring())?;
            let out = solve_radial(&spec)?;
            let (mut lhs, mut rhs) = (0.0, 0.0);
            for ((r, v), w) in out.v.r.iter().zip(&out.v.v).zip(out.v.weights()) {
                lhs += eps * v.norm_sqr() * w;
                rhs += ((spec.f)(*r) * v.conj()).im * w;
            }
            worst_diss = worst_diss.max((lhs - rhs).abs() / lhs);
        }
        let problem = GridProblem::new(4.0, 0.25, &variable, &DomainSpec::Ball { r0: 1.0 })?;
        let f: PointSource = Arc::new(|x: &[f64]| {
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            c((-(r - 2.0) * (r - 2.0)).exp(), 0.2 * x[0])
        });
        let rhs = problem.sample(&f);
        for (lambda, eps) in [(-1.0, 1.0), (5.0, 0.3)] {
            let opts = SolveOptions {
                tol: 1e-12,
                ..SolveOptions::default()
            };
            let out = problem.solve(lambda, eps, &rhs, &opts)?;
            let lhs: f64 = eps * out.v.v.iter().map(|z| z.norm_sqr()).sum::<f64>();
            let im: f64 = rhs.iter().zip(&out.v.v).map(|(f, v)| (f * v.conj()).im).sum();
            worst_diss = worst_diss.max((lhs - im).abs() / lhs);
        }
        pass &= worst_diss <= DISSIPATION_TOL;
        notes.push(format!("dissipation {worst_diss:.1e}"));

        let h = 0.25;
        let base = presets::magnetic_small(3, 0.5, 0.3)?;
        let gauged = gauged_coefficients(&base)?;
        let chi = |x: &[f64]| (0.4 * x[0] + 0.2 * x[1] * x[2]).sin();
        let fg0: PointSource = Arc::new(|x: &[f64]| {
            let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            c((-r2).exp(), 0.5 * x[1] * (-r2).exp())
        });
        let f2 = fg0.clone();
        let fg: PointSource = Arc::new(move |x: &[f64]| f2(x) * Complex64::from_polar(1.0, -chi(x)));
        let spec = |coeffs: CoefficientSet, f: PointSource| Grid3DSolveSpec {
            half_width: 4.0,
            h,
            coeffs,
            domain: DomainSpec::Whole,
            lambda: 1.0,
            eps: 0.5,
            f,
            options: SolveOptions::default(),
        };
        let v = solve_3d(&spec(base, fg0))?.v;
        let w = solve_3d(&spec(gauged, fg))?.v;
        let (mut diff, mut norm) = (0.0, 0.0);
        for i in 0..v.grid.len() {
            let rot = v.v[i] * Complex64::from_polar(1.0, -chi(&v.grid.point(i)));
            diff += (w.v[i] - rot).norm_sqr();
            norm += v.v[i].norm_sqr();
        }
        let gauge = (diff / norm).sqrt();
        pass &= gauge <= GAUGE_FACTOR * h * h;
        notes.push(format!("gauge {gauge:.2e} (bound {:.2e})", GAUGE_FACTOR * h * h));

        let mut agreement = Vec::new();
        for r0 in [0.0, 1.0] {
            let domain = if r0 == 0.0 {
                DomainSpec::Whole
            } else {
                DomainSpec::Ball { r0 }
            };
            let fr = ring();
            let f3 = fr.clone();
            let f: PointSource = Arc::new(move |x: &[f64]| f3((x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()));
            let g = solve_3d(&Grid3DSolveSpec {
                half_width: 8.0,
                h,
                coeffs: id3.clone(),
                domain,
                lambda: 1.0,
                eps: 0.5,
                f,
                options: SolveOptions::default(),
            })?
            .v;
            let prof = solve_radial(&RadialSolveSpec::from_coefficients(&id3, r0, 8.0, 8000, 1.0, 0.5, fr)?)?.v;
            let (mut diff, mut norm) = (0.0, 0.0);
            for i in 0..g.grid.len() {
                let x = g.grid.point(i);
                let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                if r > 6.0 || g.mask[i] {
                    continue;
                }
                diff += (g.v[i] - prof.value_at(r)).norm_sqr();
                norm += prof.value_at(r).norm_sqr();
            }
            agreement.push((diff / norm).sqrt());
        }
        pass &= agreement[0] <= AGREEMENT_FACTOR * h * h;
        notes.push(format!(
            "radial/3D {:.2e} (bound {:.2e}); with ball r0 = 1 {:.2e} (staircase boundary, bound {:.2e})",
            agreement[0],
            AGREEMENT_FACTOR * h * h,
            agreement[1],
            AGREEMENT_FACTOR * h
        ));
        pass &= agreement[1] <= AGREEMENT_FACTOR * h;
        Ok((pass, notes.join(", ")))
    };
    match run() {
        Ok((p, d)) => outcome(p, d),
        Err(e) => outcome(false, e.to_string()),
    }
}

fn run_bundled(name: &str) -> Result<ScenarioReport, String> {
    let out = run_scenario_file(
        &bundled_scenarios_dir().join(format!("{name}.json")),
        &RunOptions::default(),
    );
    match (out.report, out.error) {
        (Some(r), _) => Ok(r),
        (None, e) => Err(format!("{name}: {e:?}")),
    }
}

fn thesis_pass(r: &ScenarioReport, names: &[&str]) -> bool {
    r.records.len() == r.scenario.sweep.pairs().len()
        && r.records.iter().all(|rec| {
            names.iter().all(|n| rec.checks.iter().any(|c| c.name == *n && c.pass))
                && r.scenario.assertions.slack == ESTIMATE_SLACK
        })
}

fn max_ratio(r: &ScenarioReport, name: &str) -> f64 {
    r.summary.max_ratio.get(name).copied().unwrap_or(f64::NAN)
}

fn aux_pass(r: &ScenarioReport) -> (bool, usize) {
    let aux = [
        "epsest",
        "lambdapos",
        "lambdaneg",
        "epsestbis",
        "lambdaposbis",
        "lambdanegbis",
    ];
    let mut count = 0;
    let ok = r.records.iter().all(|rec| {
        let checks: Vec<_> = rec.checks.iter().filter(|c| aux.contains(&c.name.as_str())).collect();
        count += checks.len();
        checks.len() >= 2 && checks.iter().all(|c| c.pass)
    });
    (ok, count)
}

const THESIS_A: [&str; 3] = ["thesisA", "thesisA2-lambda", "thesisA2-eps"];
const THESIS_B: [&str; 3] = ["thesisB", "thesisB2-lambda", "thesisB2-eps"];

fn theorem_homogeneous(free: &Result<ScenarioReport, String>, n4: &Result<ScenarioReport, String>) -> Outcome {
    match (free, n4) {
        (Ok(f), Ok(d)) => {
            let pass = thesis_pass(f, &THESIS_A) && thesis_pass(d, &THESIS_A) && f.constants.main == M0_IDENTITY;
            outcome(
                pass,
                format!(
                    "free n=3: {} records, max ratios {:.2e} / {:.2e} / {:.2e}; diag-n4: {} records, max ratio {:.2e}",
                    f.records.len(),
                    max_ratio(f, "thesisA"),
                    max_ratio(f, "thesisA2-lambda"),
                    max_ratio(f, "thesisA2-eps"),
                    d.records.len(),
                    max_ratio(d, "thesisA"),
                ),
            )
        }
        (Err(e), _) | (_, Err(e)) => outcome(false, e.clone()),
    }
}

fn theorem_nonhomogeneous(r: &Result<ScenarioReport, String>) -> Outcome {
    match r {
        Ok(r) => {
            let grid_65 = matches!(
                r.scenario.solver,
                morawetz_lab::harness::SolverConfig::Grid { half_width, h, .. } if (2.0 * half_width / h) as usize + 1 == 65
            );
            outcome(
                thesis_pass(r, &THESIS_B) && grid_65,
                format!(
                    "ball r0 = 1 at 65^3: {} records, C+ = {:.2e}, max ratios {:.2e} / {:.2e} / {:.2e}",
                    r.records.len(),
                    r.constants.c_plus,
                    max_ratio(r, "thesisB"),
                    max_ratio(r, "thesisB2-lambda"),
                    max_ratio(r, "thesisB2-eps"),
                ),
            )
        }
        Err(e) => outcome(false, e.clone()),
    }
}

fn auxiliary(reports: &[&Result<ScenarioReport, String>]) -> Outcome {
    let mut total = 0;
    let mut pass = true;
    let mut worst: f64 = 0.0;
    for r in reports {
        match r {
            Ok(r) => {
                let (ok, n) = aux_pass(r);
                pass &= ok;
                total += n;
                for (k, v) in &r.summary.max_ratio {
                    if !k.starts_with("thesis") {
                        worst = worst.max(*v);
                    }
                }
            }
            Err(_) => pass = false,
        }
    }
    outcome(
        pass,
        format!(
            "{total} auxiliary checks over {} scenarios, worst ratio {worst:.3}",
            reports.len()
        ),
    )
}

fn scaling(free: &Result<ScenarioReport, String>) -> Outcome {
    let base = match free {
        Ok(r) => r,
        Err(e) => return outcome(false, e.clone()),
    };
    let ratios = |r: &ScenarioReport| -> Vec<f64> {
        r.records
            .iter()
            .map(|rec| {
                rec.checks
                    .iter()
                    .find(|c| c.name == "thesisA")
                    .map_or(f64::NAN, |c| c.ratio)
            })
            .collect()
    };
    let reference = ratios(base);
    let mut worst: f64 = 0.0;
    for s in [0.5, 2.0] {
        let mut sc: Scenario = base.scenario.clone();
        sc.scale = s;
        match verify_estimate(&sc, false) {
            Ok(r) => {
                for (a, b) in ratios(&r).iter().zip(&reference) {
                    worst = worst.max((a / b - 1.0).abs());
                }
            }
            Err(e) => return outcome(false, e.to_string()),
        }
    }
    outcome(
        worst <= SCALING_TOL,
        format!("s in {{1/2, 2}}: worst relative change of thesisA ratio {worst:.2e}"),
    )
}

fn report(k: usize, name: &str, start: Instant, o: &Outcome) -> bool {
    println!(
        "criterion {k} {} {name} ({:.1} s): {}",
        if o.pass { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64(),
        o.detail
    );
    o.pass
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let mut all = true;

    let t = Instant::now();
    all &= report(1, "multiplier identities", t, &identities());
    let t = Instant::now();
    all &= report(2, "norm lemmas", t, &lemmas());
    let t = Instant::now();
    all &= report(3, "condition checker", t, &conditions());
    let t = Instant::now();
    all &= report(4, "solver verification", t, &solver());

    let t = Instant::now();
    let free = run_bundled("free-space");
    let n4 = run_bundled("diag-n4");
    all &= report(5, "homogeneous estimate", t, &theorem_homogeneous(&free, &n4));
    let t = Instant::now();
    let ball = run_bundled("near-identity-ball");
    all &= report(6, "nonhomogeneous estimate", t, &theorem_nonhomogeneous(&ball));
    let t = Instant::now();
    all &= report(7, "auxiliary bounds", t, &auxiliary(&[&free, &n4, &ball]));
    let t = Instant::now();
    all &= report(8, "scaling", t, &scaling(&free));

    println!("acceptance: {}", if all { "all criteria pass" } else { "FAILURES" });
    if !all {
        std::process::exit(1);
    }
}
