//! Named coefficient presets and random analytic coefficient draws.

use super::{japanese_jet, CoefficientSet, Field, MatrixField, PotentialField, RadialCoefficients, VectorField};
use crate::error::{Error, Result};
use crate::jet::RJet;
use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

pub const PRESET_IDS: [&str; 5] = [
    "identity",
    "diag-n4-remark",
    "near-identity-n3",
    "magnetic-small",
    "coulomb-repulsive",
];

/// Optional overrides for preset parameters.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PresetParams {
    pub n: Option<usize>,
    pub delta: Option<f64>,
    /// Amplitude of the variable part of `a`.
    pub eta_a: Option<f64>,
    /// Amplitude of the magnetic potential.
    pub eta_b: Option<f64>,
    /// Strength of the electric potential.
    pub kappa: Option<f64>,
}

pub fn build(id: &str, p: &PresetParams) -> Result<CoefficientSet> {
    let delta = p.delta.unwrap_or(0.5);
    match id {
        "identity" => CoefficientSet::identity(p.n.unwrap_or(3), delta),
        "diag-n4-remark" => diag_n4_remark(
            p.n.unwrap_or(4),
            delta,
            p.eta_a.unwrap_or(DIAG_N4_ETA),
            p.kappa.unwrap_or(0.25),
        ),
        "near-identity-n3" => near_identity_n3(
            delta,
            p.eta_a.unwrap_or(8e-7),
            p.eta_b.unwrap_or(1e-4),
            p.kappa.unwrap_or(0.25),
        ),
        "magnetic-small" => magnetic_small(p.n.unwrap_or(3), delta, p.eta_b.unwrap_or(1e-3)),
        "coulomb-repulsive" => coulomb_repulsive(p.n.unwrap_or(3), delta, p.kappa.unwrap_or(0.5)),
        other => Err(Error::InvalidInput(format!(
            "unknown preset '{other}' (known: {})",
            PRESET_IDS.join(", ")
        ))),
    }
}

/// Default amplitude for the variable part of `α` in the n = 4 diagonal preset.
pub const DIAG_N4_ETA: f64 = 3e-5;

fn scalar_times_identity(n: usize, s: RJet) -> Vec<RJet> {
    let zero = RJet::zero(s.nvars(), s.order());
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push(if i == j { s.clone() } else { zero.clone() });
        }
    }
    out
}

/// `a = α(|x|)I` with `α = 1 + η(1 − ⟨x⟩^{−δ})`, `b = 0`, `c = κ/|x|²`.
pub fn diag_n4_remark(n: usize, delta: f64, eta: f64, kappa: f64) -> Result<CoefficientSet> {
    let a = Field::analytic(
        n,
        n * n,
        Arc::new(move |xs: &[RJet]| {
            let g = japanese_jet(xs).powf(-delta).scale(-eta).add_const(1.0 + eta);
            scalar_times_identity(xs.len(), g)
        }),
    );
    let c = Field::analytic(
        n,
        1,
        Arc::new(move |xs: &[RJet]| vec![RJet::sum_squares(xs).recip().scale(kappa)]),
    );
    let radial = RadialCoefficients {
        alpha: Arc::new(move |r: f64| 1.0 + eta * (1.0 - (1.0 + r * r).powf(-delta / 2.0))),
        c: Arc::new(move |r: f64| kappa / (r * r)),
    };
    Ok(CoefficientSet::new(
        "diag-n4-remark",
        delta,
        MatrixField(a),
        VectorField::zero(n),
        PotentialField(c),
    )?
    .with_radial(radial))
}

/// Fixed symmetric nondiagonal matrix of unit operator norm.
pub fn unit_perturbation() -> DMatrix<f64> {
    let m = DMatrix::from_row_slice(3, 3, &[0.2, 0.5, 0.1, 0.5, -0.3, 0.4, 0.1, 0.4, 0.6]);
    let norm = m.clone().symmetric_eigen().eigenvalues.amax();
    m / norm
}

fn rotational_b(n: usize, delta: f64, eta: f64) -> Field {
    Field::analytic(
        n,
        n,
        Arc::new(move |xs: &[RJet]| {
            let g = japanese_jet(xs).powf(-2.0 - delta).scale(eta);
            let zero = RJet::zero(xs.len(), xs[0].order());
            let mut out = vec![zero; xs.len()];
            out[0] = -&g.mul_jet(&xs[1]);
            out[1] = g.mul_jet(&xs[0]);
            out
        }),
    )
}

/// `a = I + η_a⟨x⟩^{−δ}M`, `b = η_b⟨x⟩^{−2−δ}(−x₂, x₁, 0)`, `c = κ⟨x⟩^{−2}`.
pub fn near_identity_n3(delta: f64, eta_a: f64, eta_b: f64, kappa: f64) -> Result<CoefficientSet> {
    let m = unit_perturbation();
    let a = Field::analytic(
        3,
        9,
        Arc::new(move |xs: &[RJet]| {
            let g = japanese_jet(xs).powf(-delta).scale(eta_a);
            let mut out = Vec::with_capacity(9);
            for i in 0..3 {
                for j in 0..3 {
                    let mut e = g.scale(m[(i, j)]);
                    if i == j {
                        e = e.add_const(1.0);
                    }
                    out.push(e);
                }
            }
            out
        }),
    );
    let c = Field::analytic(
        3,
        1,
        Arc::new(move |xs: &[RJet]| vec![RJet::sum_squares(xs).add_const(1.0).recip().scale(kappa)]),
    );
    CoefficientSet::new(
        "near-identity-n3",
        delta,
        MatrixField(a),
        VectorField(rotational_b(3, delta, eta_b)),
        PotentialField(c),
    )
}

/// `a = I`, `b = η⟨x⟩^{−2−δ}(−x₂, x₁, 0, …)`, `c = 0`.
pub fn magnetic_small(n: usize, delta: f64, eta: f64) -> Result<CoefficientSet> {
    CoefficientSet::new(
        "magnetic-small",
        delta,
        MatrixField::identity(n),
        VectorField(rotational_b(n, delta, eta)),
        PotentialField::zero(n),
    )
}

/// `a = I`, `b = 0`, `c = κ/(|x|⟨x⟩)`.
pub fn coulomb_repulsive(n: usize, delta: f64, kappa: f64) -> Result<CoefficientSet> {
    let c = Field::analytic(
        n,
        1,
        Arc::new(move |xs: &[RJet]| {
            let r = super::radius_jet(xs);
            vec![r.mul_jet(&japanese_jet(xs)).recip().scale(kappa)]
        }),
    );
    let radial = RadialCoefficients {
        alpha: Arc::new(|_| 1.0),
        c: Arc::new(move |r: f64| kappa / (r * (1.0 + r * r).sqrt())),
    };
    Ok(CoefficientSet::new(
        "coulomb-repulsive",
        delta,
        MatrixField::identity(n),
        VectorField::zero(n),
        PotentialField(c),
    )?
    .with_radial(radial))
}

/// A random smooth field `x ↦ Σ w_i · sin(k_i·x + φ_i)` entry by entry.
struct Wave {
    k: Vec<f64>,
    phase: f64,
}

impl Wave {
    fn random<R: Rng>(rng: &mut R, n: usize, kmax: f64) -> Self {
        Self {
            k: (0..n).map(|_| rng.gen_range(-kmax..kmax)).collect(),
            phase: rng.gen_range(0.0..std::f64::consts::TAU),
        }
    }

    fn jet(&self, xs: &[RJet]) -> RJet {
        let mut arg = RJet::constant(xs.len(), xs[0].order(), self.phase);
        for (x, k) in xs.iter().zip(&self.k) {
            arg = &arg + &x.scale(*k);
        }
        arg.sin()
    }
}

fn random_symmetric<R: Rng>(rng: &mut R, n: usize, scale: f64) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    (&m + m.transpose()) * (0.5 * scale)
}

/// Random analytic `(a, b, c)`: `a` a bounded oscillating perturbation of an SPD matrix,
/// `b` and `c` random superpositions of plane-wave sines.
pub fn random_coefficients<R: Rng>(n: usize, rng: &mut R, amplitude: f64) -> CoefficientSet {
    let base = random_symmetric(rng, n, 0.2) + DMatrix::identity(n, n);
    let nw = 2;
    let waves_a: Vec<(Wave, DMatrix<f64>)> = (0..nw)
        .map(|_| (Wave::random(rng, n, 1.5), random_symmetric(rng, n, amplitude)))
        .collect();
    let waves_b: Vec<(Wave, Vec<f64>)> = (0..nw)
        .map(|_| {
            (
                Wave::random(rng, n, 1.5),
                (0..n).map(|_| rng.gen_range(-amplitude..amplitude)).collect(),
            )
        })
        .collect();
    let waves_c: Vec<(Wave, f64)> = (0..nw)
        .map(|_| (Wave::random(rng, n, 1.5), rng.gen_range(-amplitude..amplitude)))
        .collect();
    let c0 = rng.gen_range(-amplitude..amplitude);
    let a = Field::analytic(
        n,
        n * n,
        Arc::new(move |xs: &[RJet]| {
            let sines: Vec<RJet> = waves_a.iter().map(|(w, _)| w.jet(xs)).collect();
            let mut out = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    let mut e = RJet::constant(n, xs[0].order(), base[(i, j)]);
                    for (s, (_, m)) in sines.iter().zip(&waves_a) {
                        e = &e + &s.scale(m[(i, j)]);
                    }
                    out.push(e);
                }
            }
            out
        }),
    );
    let b = Field::analytic(
        n,
        n,
        Arc::new(move |xs: &[RJet]| {
            let sines: Vec<RJet> = waves_b.iter().map(|(w, _)| w.jet(xs)).collect();
            (0..n)
                .map(|l| {
                    let mut e = RJet::zero(n, xs[0].order());
                    for (s, (_, u)) in sines.iter().zip(&waves_b) {
                        e = &e + &s.scale(u[l]);
                    }
                    e
                })
                .collect()
        }),
    );
    let c = Field::analytic(
        n,
        1,
        Arc::new(move |xs: &[RJet]| {
            let mut e = RJet::constant(n, xs[0].order(), c0);
            for (w, s) in &waves_c {
                e = &e + &w.jet(xs).scale(*s);
            }
            vec![e]
        }),
    );
    CoefficientSet::new("random", 0.5, MatrixField(a), VectorField(b), PotentialField(c))
        .expect("random coefficients are well formed")
}

/// Random smooth real field, for use as a weight or potential in identity checks.
pub fn random_scalar<R: Rng>(n: usize, rng: &mut R, amplitude: f64) -> Field {
    let waves: Vec<(Wave, f64)> = (0..3)
        .map(|_| (Wave::random(rng, n, 1.2), rng.gen_range(-amplitude..amplitude)))
        .collect();
    Field::analytic(
        n,
        1,
        Arc::new(move |xs: &[RJet]| {
            let mut e = RJet::zero(n, xs[0].order());
            for (w, s) in &waves {
                e = &e + &w.jet(xs).scale(*s);
            }
            vec![e]
        }),
    )
}
