//! Randomized battery for the norm inequalities, at their explicit constants.

use super::{field_densities, japanese, RadialSource, ShellGrid, ShellProfile, ShellSource, SphereSource};
use crate::error::{Error, Result};
use crate::fields::{DomainSpec, GaussTerm, TestFunction, TestFunctionSpec, VectorField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct LemmaConfig {
    pub n: usize,
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
    pub slack: f64,
    pub grid: ShellGrid,
    pub polar_nodes: usize,
    pub spread: f64,
    pub max_wave: f64,
    /// Trials re-evaluated on a refined grid to detect unresolved quadrature.
    pub refinement_trials: usize,
}

impl Default for LemmaConfig {
    fn default() -> Self {
        Self {
            n: 3,
            delta: 0.5,
            trials: 100,
            seed: 7,
            slack: 1e-3,
            grid: ShellGrid {
                octave_min: -12,
                octave_max: 6,
                per_octave: 10,
                gauss: 4,
                dyadic_min: -11,
                dyadic_max: 6,
                refine_rounds: 3,
            },
            polar_nodes: 28,
            spread: 1.0,
            max_wave: 2.0,
            refinement_trials: 2,
        }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct InequalityReport {
    pub name: String,
    pub constant: String,
    pub trials: usize,
    pub worst_ratio: f64,
    pub worst_trial: usize,
    pub pass: bool,
}

/// One evaluated inequality `lhs ≤ rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sides {
    pub name: &'static str,
    pub constant: &'static str,
    pub lhs: f64,
    pub rhs: f64,
}

const V: usize = 0;
const G: usize = 1;
const VG: usize = 2;
const W: usize = 3;
const VW: usize = 4;

/// Random radial test function (sum of centered Gaussians with complex amplitudes).
pub fn random_radial<R: Rng>(n: usize, rng: &mut R) -> TestFunction {
    let nterms = rng.gen_range(1..=3);
    let terms = (0..nterms)
        .map(|_| GaussTerm {
            amp: [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
            center: vec![0.0; n],
            sigma: rng.gen_range(0.4..2.0),
            monomial: vec![0; n],
            wave: vec![0.0; n],
        })
        .collect();
    TestFunction::from_spec(n, TestFunctionSpec { terms, cutoff: None })
}

/// Shell source for the channels `(|v|², |∇ᵇv|², |v||∇ᵇv|, |w|², |v||w|)`.
pub fn pair_source(
    v: TestFunction,
    w: TestFunction,
    b: VectorField,
    domain: DomainSpec,
    polar_nodes: usize,
) -> Result<Box<dyn ShellSource>> {
    let n = v.dim();
    let point = move |x: &[f64]| -> Vec<f64> {
        let [v2, g2, vg] = field_densities(&v, &b, x);
        let w2 = w.value(x).norm_sqr();
        vec![v2, g2, vg, w2, (v2 * w2).sqrt()]
    };
    let radial_ok = domain.is_empty() || domain.ball_radius().is_some();
    if n == 3 {
        Ok(Box::new(SphereSource::new(5, Box::new(point), domain, polar_nodes)))
    } else if radial_ok {
        let inner = domain.ball_radius().unwrap_or(0.0);
        let densities = (0..5)
            .map(|k| {
                let p = point.clone();
                Box::new(move |r: f64| {
                    let mut x = vec![0.0; n];
                    x[0] = r;
                    p(&x)[k]
                }) as Box<dyn Fn(f64) -> f64 + Send + Sync>
            })
            .collect();
        let mut src = RadialSource::new(n, densities).with_inner(inner);
        if inner > 0.0 {
            src = src.with_breakpoints(vec![inner]);
        }
        Ok(Box::new(src))
    } else {
        Err(Error::InvalidInput(
            "non-radial shell integrals are available only for n = 3".into(),
        ))
    }
}

fn sup_weighted_over_radius(
    p: &ShellProfile,
    k: usize,
    w: impl Fn(f64) -> f64 + Sync + 'static,
    scale: impl Fn(f64) -> f64,
) -> f64 {
    let cw = p.weighted(k, w);
    p.sup(
        0.0,
        f64::INFINITY,
        |i, r| cw.at_node(i) / scale(r),
        |r| cw.upto(r) / scale(r),
    )
    .value
}

/// Evaluate every inequality on one profile with the channel layout of [`pair_source`].
pub fn evaluate(p: &ShellProfile, delta: f64) -> Result<Vec<Sides>> {
    let n = p.dim() as f64;
    let d = delta;
    let mut out = Vec::new();
    let mut push = |name, constant, lhs: f64, rhs: f64| {
        out.push(Sides {
            name,
            constant,
            lhs,
            rhs,
        })
    };

    let xd2 = p.xdot_sq(V).value;
    let x2 = p.x_sq(V).value;
    let yd2 = p.ydot_sq(V).value;
    let y2 = p.y_sq(V).value;
    let gy2 = p.y_sq(G).value;
    let wyd = p.ydot_sq(W).value.sqrt();
    let wy = p.y_sq(W).value.sqrt();
    let w_ydual = p.ydot_dual(W)?;
    let w_ydual_nh = p.y_dual(W)?;

    push(
        "stnorma8 (homogeneous)",
        "1",
        sup_weighted_over_radius(p, V, |r| 1.0 / (r * r), |r| r),
        xd2,
    );
    push(
        "stnorma8 (nonhomogeneous)",
        "1",
        sup_weighted_over_radius(p, V, |r| 1.0 / (1.0 + r * r), japanese),
        x2,
    );

    let i1 = p
        .weighted(V, move |r| 1.0 / (r * r * japanese(r).powf(1.0 + d)))
        .total();
    push("stnorma1", "2/delta", i1, 2.0 / d * xd2);
    let i3a = p
        .weighted(V, move |r| 1.0 / (r.powi(3) * japanese(r).powf(d)))
        .beyond(1.0);
    let i3b = p.weighted(V, move |r| r.powf(-3.0 - d)).beyond(1.0);
    push("stnorma3 (left)", "1", i3a, i3b);
    push("stnorma3 (right)", "2/delta", i3b, 2.0 / d * x2);
    let i4 = p.weighted(V, move |r| japanese(r).powf(-1.0 - d)).total();
    push("stnorma4 (left)", "8/delta", i4, 8.0 / d * y2);
    push("stnorma4 (right)", "8/delta", 8.0 / d * y2, 8.0 / d * yd2);

    let inv = p.weighted(V, |r| 1.0 / r);
    let ring = |r: f64| inv.between(r, 2.0 * r) / (r * r);
    let s6 = p.sup(1.0, f64::INFINITY, |_, r| ring(r), ring).value;
    push("stnorma6", "3", s6, 3.0 * x2);
    let s9 = p.sup(0.0, f64::INFINITY, |_, r| ring(r), ring).value;
    push("stnorma9", "3/2", s9, 1.5 * xd2);
    let np2 = n + 2.0;
    let tail = p.weighted(V, move |r| r.powf(-np2));
    let t = |r: f64| r.powf(n - 1.0) * tail.beyond(r);
    let s2a = p
        .sup(0.0, f64::INFINITY, |i, r| r.powf(n - 1.0) * tail.beyond_node(i), t)
        .value;
    push("stnorma2 (homogeneous)", "1/(n-1)", s2a, xd2 / (n - 1.0));
    let s2b = p
        .sup(1.0, f64::INFINITY, |i, r| r.powf(n - 1.0) * tail.beyond_node(i), t)
        .value;
    push("stnorma2 (nonhomogeneous)", "2/(n-1)", s2b, 2.0 * x2 / (n - 1.0));

    let (xd, x) = (xd2.sqrt(), x2.sqrt());
    let vw = p.weighted(VW, |_| 1.0);
    let ratios: [Box<dyn Fn(f64) -> f64 + '_>; 4] = [
        Box::new(|r: f64| vw.between(r, 2.0 * r) / (3.0 * r * r * xd * wyd)),
        Box::new(|r: f64| vw.upto(r) / (r * xd * w_ydual)),
        Box::new(|r: f64| vw.between(r, 2.0 * r) / (3.0 * (1.0 + r * r) * x * wy)),
        Box::new(|r: f64| vw.upto(r) / (japanese(r) * x * w_ydual_nh)),
    ];
    let names = [
        ("stnorma5 (annulus)", "3R^2"),
        ("stnorma5 (ball, dual)", "R"),
        ("stnorma5b (annulus)", "3<R>^2"),
        ("stnorma5b (ball, dual)", "<R>"),
    ];
    for (f, (name, c)) in ratios.iter().zip(names) {
        let worst = p.sup(0.0, f64::INFINITY, |_, r| f(r), f).value;
        push(name, c, if worst.is_finite() { worst } else { 0.0 }, 1.0);
    }
    let near = p.weighted(VW, move |r| r.powf(d - 2.0)).upto(1.0);
    let far = p.weighted(VW, move |r| r.powf(-2.0 - d)).beyond(1.0);
    push("stnorma10", "9/delta", near + far, 9.0 / d * xd * wyd);
    push("stnorma10b", "12/delta", far, 12.0 / d * x * wy);

    let hardy_c = 2.0 / (n - 2.0);
    let inv2 = p.weighted(V, |r| 1.0 / (r * r)).total();
    push("hardymag1", "2/(n-2)", inv2, hardy_c * hardy_c * p.total(G));
    let lhs12 = sup_weighted_over_radius(p, V, |r| 1.0 / (r * r), japanese);
    push("stnorma12", "6, 3", lhs12, 6.0 * gy2 + 3.0 * x2);
    let near13 = p.weighted(VG, |r| 1.0 / r).upto(1.0);
    let far13 = p.weighted(VG, move |r| r.powf(-2.0 - d)).beyond(1.0);
    push("stnorma13", "9/delta", near13 + far13, 9.0 / d * (gy2 + x2));
    let s7 = p.xdot_sq_beyond_one(V).value;
    push("stnorma7", "4, 13", x2, 4.0 * s7 + 13.0 * gy2);
    let i11 = p
        .weighted(V, move |r| 1.0 / (r * japanese(r).powf(1.0 + d) * r.max(1.0)))
        .total();
    push(
        "stnorma11",
        "8/delta, 9",
        i11,
        8.0 / d * x2 + 9.0 * p.cumulative(G, 1.0),
    );

    // equivalences
    let mid = p.ydot_sq_beyond_one(V).value;
    push("equivnonhom (left)", "1", y2, mid);
    push("equivnonhom (right)", "sqrt2", mid, 2f64.sqrt() * y2);
    let ydd = p.ydot_dyadic(V);
    let yd = yd2.sqrt();
    push("dyadic Ydot (lower)", "1/2", 0.5 * ydd, yd);
    push("dyadic Ydot (upper)", "2", yd, 2.0 * ydd);
    let ydy = p.y_dyadic(V);
    let y = y2.sqrt();
    push("dyadic Y (lower)", "1/3", ydy / 3.0, y);
    push("dyadic Y (upper)", "3", y, 3.0 * ydy);
    push("duality", "4", p.total(VW), 4.0 * yd * w_ydual);
    Ok(out)
}

fn ratio_of(s: &Sides) -> f64 {
    if s.rhs > 0.0 {
        s.lhs / s.rhs
    } else if s.lhs > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

fn relative_change(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Run the battery on `cfg.trials` random pairs `(v, w)`.
pub fn lemma_suite(cfg: &LemmaConfig, b: &VectorField, domain: &DomainSpec) -> Result<Vec<InequalityReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut reports: Vec<InequalityReport> = Vec::new();
    for trial in 0..cfg.trials {
        let (v, w) = if cfg.n == 3 {
            (
                TestFunction::random(3, &mut rng, cfg.spread, cfg.max_wave),
                TestFunction::random(3, &mut rng, cfg.spread, cfg.max_wave),
            )
        } else {
            (random_radial(cfg.n, &mut rng), random_radial(cfg.n, &mut rng))
        };
        let (v, w) = match domain.ball_radius() {
            Some(r0) => {
                let cut = crate::fields::RadialCutoff { r0, r1: r0 + 0.5 };
                (v.with_cutoff(cut), w.with_cutoff(cut))
            }
            None => (v, w),
        };
        let src = pair_source(v.clone(), w.clone(), b.clone(), domain.clone(), cfg.polar_nodes)?;
        let profile = ShellProfile::new(src.as_ref(), &cfg.grid);
        let sides = evaluate(&profile, cfg.delta)?;
        if trial < cfg.refinement_trials {
            let fine_src = pair_source(v, w, b.clone(), domain.clone(), cfg.polar_nodes + 8)?;
            let fine = ShellProfile::new(fine_src.as_ref(), &cfg.grid.refined());
            let fine_sides = evaluate(&fine, cfg.delta)?;
            for (a, f) in sides.iter().zip(&fine_sides) {
                let change = relative_change(ratio_of(a), ratio_of(f));
                if change > cfg.slack {
                    return Err(Error::QuadratureUnresolved {
                        quantity: a.name.to_string(),
                        change,
                    });
                }
            }
        }
        for s in sides {
            let ratio = ratio_of(&s);
            match reports.iter_mut().find(|r| r.name == s.name) {
                Some(r) => {
                    r.trials += 1;
                    if ratio > r.worst_ratio {
                        r.worst_ratio = ratio;
                        r.worst_trial = trial;
                    }
                }
                None => reports.push(InequalityReport {
                    name: s.name.to_string(),
                    constant: s.constant.to_string(),
                    trials: 1,
                    worst_ratio: ratio,
                    worst_trial: trial,
                    pass: true,
                }),
            }
        }
    }
    for r in &mut reports {
        r.pass = r.worst_ratio <= 1.0 + cfg.slack;
    }
    Ok(reports)
}
