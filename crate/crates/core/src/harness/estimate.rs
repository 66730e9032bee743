use crate::conditions::{ser_f64, Constants, Mode};
use crate::error::{Error, Result};
use crate::fields::DomainSpec;
use crate::norms::{NormBundle, ProfileSource, RadialSource, ShellGrid, ShellProfile, ShellSource, SphereSource};
use crate::solver::{GridField, RadialProfile};
use num_complex::Complex64;
use serde::Serialize;
use std::sync::Arc;

/// One asserted inequality `lhs ≤ (1 + slack)·rhs`.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Inequality {
    pub name: String,
    #[serde(serialize_with = "ser_f64")]
    pub lhs: f64,
    #[serde(serialize_with = "ser_f64")]
    pub rhs: f64,
    /// `lhs / rhs`, zero when both sides vanish.
    #[serde(serialize_with = "ser_f64")]
    pub ratio: f64,
    pub pass: bool,
}

impl Inequality {
    pub fn new(name: &str, lhs: f64, rhs: f64, slack: f64) -> Self {
        let ratio = if lhs == 0.0 {
            0.0
        } else if rhs == 0.0 {
            f64::INFINITY
        } else {
            lhs / rhs
        };
        Self {
            name: name.into(),
            lhs,
            rhs,
            ratio,
            pass: lhs.is_finite() && rhs.is_finite() && lhs <= (1.0 + slack) * rhs,
        }
    }
}

/// Norms of `v`, `∇ᵇv` and `f` entering the estimates.
#[derive(Clone, Debug, Serialize)]
pub struct SolvedNorms {
    pub v: NormBundle,
    pub grad: NormBundle,
    pub f: NormBundle,
}

fn bundles(src: &dyn ShellSource, grid: &ShellGrid, channels: &[usize]) -> Vec<NormBundle> {
    let profile = ShellProfile::new(src, grid);
    channels.iter().map(|&k| profile.bundle(k)).collect()
}

/// `|f|²` restricted to the domain.
pub fn source_norms(
    n: usize,
    f: Arc<dyn Fn(f64) -> Complex64 + Send + Sync>,
    domain: &DomainSpec,
    grid: &ShellGrid,
    polar_nodes: usize,
) -> NormBundle {
    match domain {
        DomainSpec::Whole | DomainSpec::Ball { .. } => {
            let src = RadialSource::new(n, vec![Box::new(move |r: f64| f(r).norm_sqr())])
                .with_inner(domain.ball_radius().unwrap_or(0.0));
            bundles(&src, grid, &[0]).remove(0)
        }
        DomainSpec::LevelSet { .. } => {
            let src = SphereSource::new(
                1,
                Box::new(move |x: &[f64]| vec![f((x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()).norm_sqr()]),
                domain.clone(),
                polar_nodes,
            );
            bundles(&src, grid, &[0]).remove(0)
        }
    }
}

pub fn radial_norms(profile: &RadialProfile, grid: &ShellGrid) -> (NormBundle, NormBundle) {
    let (r, ch) = profile.densities();
    let src = ProfileSource::new(profile.n, r, ch, profile.r0);
    let mut b = bundles(&src, grid, &[0, 1]);
    let grad = b.remove(1);
    (b.remove(0), grad)
}

pub fn grid_norms(
    field: &GridField,
    b: &crate::fields::VectorField,
    domain: &DomainSpec,
    grid: &ShellGrid,
    polar_nodes: usize,
) -> (NormBundle, NormBundle) {
    let src = field.densities(b).into_source(domain.clone(), polar_nodes);
    let mut out = bundles(&src, grid, &[0, 1]);
    let grad = out.remove(1);
    (out.remove(0), grad)
}

/// Constants on the right of the main estimates.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EstimateConstants {
    pub mode: Mode,
    pub n: usize,
    pub big_n: f64,
    pub nu: f64,
    #[serde(serialize_with = "ser_f64")]
    pub c_a: f64,
    #[serde(serialize_with = "ser_f64")]
    pub c_plus: f64,
    #[serde(serialize_with = "ser_f64")]
    pub c_minus: f64,
    /// `M₀` in the homogeneous setting, `10⁹(C₊²+1)` otherwise.
    #[serde(serialize_with = "ser_f64")]
    pub main: f64,
    #[serde(serialize_with = "ser_f64")]
    pub lambda: f64,
    #[serde(serialize_with = "ser_f64")]
    pub eps: f64,
}

impl EstimateConstants {
    pub fn new(c: &Constants, m0: Option<f64>, mode: Mode) -> Result<Self> {
        let n = c.n as f64;
        let (main, lambda, eps) = match mode {
            Mode::Homogeneous => {
                let m0 = m0.ok_or_else(|| Error::ConditionsFailed("M0 undefined: the ratio N/nu is trapped".into()))?;
                (m0, 2.0 * n * n * (c.nu + 1.0).powi(2) * m0, 9.0 * (c.nu + 1.0) * m0)
            }
            Mode::Nonhomogeneous => {
                let p = c.c_plus * c.c_plus + 1.0;
                (1e9 * p, 1e10 * p * p, 1e10 * p)
            }
        };
        Ok(Self {
            mode,
            n: c.n,
            big_n: c.big_n,
            nu: c.nu,
            c_a: c.c_a,
            c_plus: c.c_plus,
            c_minus: c.c_minus,
            main,
            lambda,
            eps,
        })
    }
}

/// The estimate and the auxiliary `λ`/`ε` bounds on one solved record.
pub fn estimate_checks(
    k: &EstimateConstants,
    lambda: f64,
    eps: f64,
    norms: &SolvedNorms,
    slack: f64,
    thesis: bool,
    aux: bool,
) -> Vec<Inequality> {
    let n = k.n as f64;
    let big_n = k.big_n;
    let (cp2, cm2) = (k.c_plus * k.c_plus, k.c_minus * k.c_minus);
    let lp = lambda.max(0.0);
    let lm = (-lambda).max(0.0);
    let mut out = Vec::new();
    match k.mode {
        Mode::Homogeneous => {
            let (vx, vy, gy, f) = (norms.v.xdot, norms.v.ydot, norms.grad.ydot, norms.f.ydot_dual);
            if thesis {
                out.push(Inequality::new("thesisA", vx * vx + gy * gy, k.main * f * f, slack));
                out.push(Inequality::new(
                    "thesisA2-lambda",
                    lambda.abs() * vy * vy,
                    k.lambda * f * f,
                    slack,
                ));
                out.push(Inequality::new("thesisA2-eps", eps * vy * vy, k.eps * f * f, slack));
            }
            if aux {
                out.push(Inequality::new(
                    "epsest",
                    eps * vy * vy,
                    3.0 * (1.0 + big_n) * (f + gy) * vx,
                    slack,
                ));
                if lambda >= 0.0 {
                    let rhs =
                        2.0 * big_n * gy * gy + 4.0 * (cp2 + big_n * (n + 1.0) + n * n * k.c_a + 1.0) * vx * vx + f * f;
                    out.push(Inequality::new("lambdapos", lp * vy * vy, rhs, slack));
                }
                if lambda <= 0.0 {
                    let rhs = 2.0 * (cm2 + big_n + n * n * k.c_a + 1.0) * vx * vx + f * f;
                    out.push(Inequality::new("lambdaneg", lm * vy * vy, rhs, slack));
                }
            }
        }
        Mode::Nonhomogeneous => {
            let (vx, vy, gy, f) = (norms.v.x, norms.v.y, norms.grad.y, norms.f.y_dual);
            if thesis {
                out.push(Inequality::new("thesisB", vx * vx + gy * gy, k.main * f * f, slack));
                out.push(Inequality::new(
                    "thesisB2-lambda",
                    lambda.abs() * vy * vy,
                    k.lambda * f * f,
                    slack,
                ));
                out.push(Inequality::new("thesisB2-eps", eps * vy * vy, k.eps * f * f, slack));
            }
            if aux {
                out.push(Inequality::new(
                    "epsestbis",
                    eps * vy * vy,
                    5f64.sqrt() * vx * f + 6.0 * big_n * vx * gy,
                    slack,
                ));
                if lambda >= 0.0 {
                    let rhs = 3.0 * (big_n + 6.0 * cp2) * gy * gy
                        + 3.0 * (big_n * (n + 1.0) + n * n * k.c_a + 3.0 * cp2) * vx * vx
                        + f * f;
                    out.push(Inequality::new("lambdaposbis", lp * vy * vy, rhs, slack));
                }
                if lambda <= 0.0 {
                    let rhs = 18.0 * cm2 * gy * gy + 3.0 * (big_n + n * n * k.c_a + 6.0 * cm2 + 1.0) * vx * vx + f * f;
                    out.push(Inequality::new("lambdanegbis", lm * vy * vy, rhs, slack));
                }
            }
        }
    }
    out
}
