use clap::{Parser, Subcommand, ValueEnum};
use morawetz_lab::conditions::{certify, CloudSpec, Mode};
use morawetz_lab::error::{Error, Result};
use morawetz_lab::fields::{presets, DomainSpec, VectorField};
use morawetz_lab::harness::{
    self, exit_code_for, field_preset_norms, run_scenario_file, solve_single, stored_norms, verify_estimate,
    write_reports, NormConfig, RunOptions, Scenario, EXIT_CONDITIONS,
};
use morawetz_lab::multiplier::{run_identity_suite, IdentitySuiteSpec, DEFAULT_SURFACE_MARGIN};
use morawetz_lab::norms::NormBundle;
use morawetz_lab::solver::io::{read_solution, write_atomic, write_solution, Layout};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Numerical checks of Morawetz-type smoothing estimates for variable-coefficient Helmholtz equations.
#[derive(Parser, Debug)]
#[command(name = "morawetz-lab", version)]
struct Cli {
    /// Scenario file (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for reports and solution files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run the sweep even when the hypotheses are not certified.
    #[arg(long, global = true)]
    force: bool,
    /// Print JSON instead of tables.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Homogeneous,
    Nonhomogeneous,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Homogeneous => Mode::Homogeneous,
            ModeArg::Nonhomogeneous => Mode::Nonhomogeneous,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Certify the coefficient hypotheses and print the derived constants.
    CheckConditions {
        /// Coefficient preset, used when no --config is given.
        #[arg(long, default_value = "identity")]
        preset: String,
        #[arg(long, value_enum, default_value = "homogeneous")]
        mode: ModeArg,
        /// Ball obstacle radius.
        #[arg(long)]
        ball: Option<f64>,
        /// Also re-run on a refined cloud and report the change.
        #[arg(long)]
        refine: bool,
    },
    /// Pointwise residuals of the multiplier identities at random points.
    VerifyIdentity {
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 1000)]
        points: usize,
        /// Fixed coefficients instead of random draws.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, default_value_t = DEFAULT_SURFACE_MARGIN)]
        surface_margin: f64,
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 1e-7)]
        tolerance: f64,
    },
    /// Norms of a field preset or of a stored solution.
    Norms {
        /// Field preset: gaussian or ring.
        #[arg(long, conflicts_with = "input")]
        field: Option<String>,
        /// HELMSOL1 file written by `solve`.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        dim: usize,
    },
    /// Solve the scenario at one (lambda, eps) and store the solution.
    Solve {
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Solve the whole sweep and check the estimates.
    VerifyEstimate,
    /// Run a scenario file end to end and write its reports.
    Run {
        /// Scenario file; defaults to --config.
        path: Option<PathBuf>,
    },
}

fn load(cli: &Cli) -> Result<Scenario> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::config("--config", "this subcommand needs a scenario file"))?;
    let mut s = Scenario::from_file(path)?;
    if let Some(seed) = cli.seed {
        s.seed = seed;
    }
    Ok(s)
}

fn out_dir(cli: &Cli) -> Result<Option<&Path>> {
    if let Some(d) = &cli.out {
        std::fs::create_dir_all(d)?;
    }
    Ok(cli.out.as_deref())
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn check(cli: &Cli, preset: &str, mode: ModeArg, ball: Option<f64>, refine: bool) -> Result<i32> {
    let report = if cli.config.is_some() {
        let s = load(cli)?;
        let coeffs = s.coefficients()?;
        certify(&coeffs, &s.domain.build(), s.mode, &s.conditions, refine)?
    } else {
        let coeffs = presets::build(preset, &Default::default())?;
        let domain = match ball {
            Some(r0) => DomainSpec::Ball { r0 },
            None => DomainSpec::Whole,
        };
        certify(&coeffs, &domain, mode.into(), &CloudSpec::default(), refine)?
    };
    if cli.json {
        print_json(&report)?;
    } else {
        print!("{}", report.table());
    }
    if let Some(dir) = out_dir(cli)? {
        let mut bytes = serde_json::to_vec_pretty(&report)?;
        bytes.push(b'\n');
        write_atomic(&dir.join("conditions.json"), &bytes)?;
    }
    Ok(if report.pass { 0 } else { EXIT_CONDITIONS })
}

fn identity(cli: &Cli, spec: IdentitySuiteSpec, tolerance: f64) -> Result<i32> {
    let report = run_identity_suite(&spec)?;
    let pass = report.worst_identity() < tolerance && report.worst_fd() < 1e-6;
    let doc = serde_json::json!({ "spec": spec, "worst": report, "tolerance": tolerance, "pass": pass });
    if cli.json {
        print_json(&doc)?;
    } else {
        println!("points {} ({} with difference oracle)", report.points, report.fd_points);
        for (name, v) in [
            ("id1", report.id1),
            ("id2", report.id2),
            ("morid", report.morid),
            ("morid2", report.morid2),
            ("fd-div-Q", report.fd_q),
            ("fd-div-P", report.fd_p),
        ] {
            println!("{name:<10} {v:.3e}");
        }
        println!("{}", if pass { "PASS" } else { "FAIL" });
    }
    if let Some(dir) = out_dir(cli)? {
        let mut bytes = serde_json::to_vec_pretty(&doc)?;
        bytes.push(b'\n');
        write_atomic(&dir.join("identity.json"), &bytes)?;
    }
    Ok(if pass { 0 } else { 1 })
}

const NORM_COLUMNS: &str = "source,channel,xdot,x,ydot,y,ydot_dual,y_dual,xdot_dual,x_dual,truncated_tail";

fn norm_row(source: &str, channel: &str, b: &NormBundle) -> String {
    format!(
        "{source},{channel},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}",
        b.xdot, b.x, b.ydot, b.y, b.ydot_dual, b.y_dual, b.xdot_dual, b.x_dual, b.truncated_tail
    )
}

fn norms(cli: &Cli, field: Option<&str>, input: Option<&Path>, dim: usize) -> Result<i32> {
    let scenario = cli.config.as_ref().map(|_| load(cli)).transpose()?;
    let cfg = scenario
        .as_ref()
        .map(|s| s.norms.clone())
        .unwrap_or_else(NormConfig::default);
    let (source, v, g) = match (field, input) {
        (Some(id), None) => {
            let (v, g) = field_preset_norms(id, dim, &cfg.grid)?;
            (id.to_string(), v, g)
        }
        (None, Some(path)) => {
            let (header, stored) = read_solution(path)?;
            let (b, domain) = match &scenario {
                Some(s) => (s.coefficients()?.b, s.domain.build()),
                None => {
                    let n = match &header.layout {
                        Layout::Radial { n, .. } => *n,
                        Layout::Grid { .. } => 3,
                    };
                    let b = presets::build(&header.preset, &Default::default())
                        .map(|c| c.b)
                        .unwrap_or_else(|_| VectorField::zero(n));
                    (b, DomainSpec::Whole)
                }
            };
            let (v, g) = stored_norms(&stored, &b, &domain, &cfg);
            (path.display().to_string(), v, g)
        }
        _ => return Err(Error::config("norms", "give exactly one of --field or --input")),
    };
    let rows = [norm_row(&source, "v", &v), norm_row(&source, "grad", &g)];
    if cli.json {
        print_json(&serde_json::json!({ "source": source, "v": v, "grad": g }))?;
    } else {
        println!("{NORM_COLUMNS}");
        for r in &rows {
            println!("{r}");
        }
    }
    if let Some(dir) = out_dir(cli)? {
        let path = dir.join("norms.csv");
        let mut text = std::fs::read_to_string(&path).unwrap_or_default();
        if text.is_empty() {
            text.push_str(NORM_COLUMNS);
            text.push('\n');
        }
        for r in &rows {
            text.push_str(r);
            text.push('\n');
        }
        write_atomic(&path, text.as_bytes())?;
    }
    Ok(0)
}

fn solve(cli: &Cli, lambda: Option<f64>, eps: Option<f64>) -> Result<i32> {
    let s = load(cli)?;
    let (l0, e0) = s.sweep.pairs().first().copied().unwrap_or((1.0, 1.0));
    let s2 = s.scale * s.scale;
    let (lambda, eps) = (s2 * lambda.unwrap_or(l0), s2 * eps.unwrap_or(e0));
    if eps.is_nan() || eps <= 0.0 || !lambda.is_finite() {
        return Err(Error::config("--eps", "eps must be positive and lambda finite"));
    }
    let (header, field, warning) = solve_single(&s, lambda, eps)?;
    let coeffs = s.coefficients()?;
    let (v, g) = stored_norms(&field, &coeffs.b, &s.domain.build(), &s.norms);
    let summary = serde_json::json!({
        "scenario": s.name,
        "header": header,
        "truncation_warning": warning,
        "norms": { "v": v, "grad": g },
    });
    if let Some(dir) = out_dir(cli)? {
        let stem = format!("{}_l{}_e{}", s.name, lambda, eps);
        write_solution(&dir.join(format!("{stem}.helmsol")), &header, &field)?;
        let mut bytes = serde_json::to_vec_pretty(&summary)?;
        bytes.push(b'\n');
        write_atomic(&dir.join(format!("{stem}.json")), &bytes)?;
    }
    if cli.json {
        print_json(&summary)?;
    } else {
        println!(
            "{}: lambda {lambda} eps {eps}, residual {:.2e} after {} iterations",
            s.name, header.relative_residual, header.iterations
        );
        println!(
            "  |v|_Xdot {:.6e}  |v|_Ydot {:.6e}  |grad v|_Ydot {:.6e}",
            v.xdot, v.ydot, g.ydot
        );
        if let Some(w) = warning {
            println!("  warning: {w}");
        }
    }
    Ok(0)
}

fn print_report(cli: &Cli, report: &harness::ScenarioReport) -> Result<()> {
    if cli.json {
        return print_json(report);
    }
    println!(
        "{} ({} records, {} passed)",
        report.scenario.name, report.summary.records, report.summary.passed
    );
    println!(
        "{:>8} {:>8} {:>12} {:>12} {:>12}  pass",
        "lambda", "eps", "lhs", "rhs", "ratio"
    );
    for r in &report.records {
        match r.checks.first() {
            Some(c) => println!(
                "{:>8} {:>8} {:>12.4e} {:>12.4e} {:>12.4e}  {}",
                r.lambda, r.eps, c.lhs, c.rhs, c.ratio, r.pass
            ),
            None => println!(
                "{:>8} {:>8}  error: {}",
                r.lambda,
                r.eps,
                r.error.as_deref().unwrap_or("no checks")
            ),
        }
    }
    for (name, m) in &report.summary.max_ratio {
        println!("max ratio {name:<16} {m:.4e}");
    }
    println!("{}", if report.summary.pass { "PASS" } else { "FAIL" });
    Ok(())
}

fn estimate(cli: &Cli) -> Result<i32> {
    let s = load(cli)?;
    let report = verify_estimate(&s, cli.force)?;
    if let Some(dir) = out_dir(cli)? {
        write_reports(&report, dir)?;
    }
    print_report(cli, &report)?;
    Ok(report.exit_code())
}

fn run(cli: &Cli, path: Option<&Path>) -> Result<i32> {
    let path = path
        .or(cli.config.as_deref())
        .ok_or_else(|| Error::config("run", "give a scenario path or --config"))?;
    out_dir(cli)?;
    let opts = RunOptions {
        force: cli.force,
        seed: cli.seed,
        out_dir: cli.out.clone(),
    };
    let outcome = run_scenario_file(path, &opts);
    if let Some(e) = outcome.error {
        return Err(e);
    }
    if let Some(report) = &outcome.report {
        print_report(cli, report)?;
    }
    for w in &outcome.written {
        eprintln!("wrote {}", w.display());
    }
    Ok(outcome.exit_code)
}

fn dispatch(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::CheckConditions {
            preset,
            mode,
            ball,
            refine,
        } => check(cli, preset, *mode, *ball, *refine),
        Command::VerifyIdentity {
            trials,
            points,
            preset,
            surface_margin,
            dim,
            tolerance,
        } => {
            let spec = IdentitySuiteSpec {
                n: *dim,
                trials: *trials,
                points: *points,
                seed: cli.seed.unwrap_or(0),
                preset: preset.clone(),
                surface_margin: *surface_margin,
                ..Default::default()
            };
            identity(cli, spec, *tolerance)
        }
        Command::Norms { field, input, dim } => norms(cli, field.as_deref(), input.as_deref(), *dim),
        Command::Solve { lambda, eps } => solve(cli, *lambda, *eps),
        Command::VerifyEstimate => estimate(cli),
        Command::Run { path } => run(cli, path.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    };
    ExitCode::from(code as u8)
}
