use super::{ComplexPotential, Phi, Probe, Psi, Weight, DEFAULT_SURFACE_MARGIN};
use crate::error::Result;
use crate::fields::presets::{self, random_coefficients, random_scalar, PresetParams};
use crate::fields::TestFunction;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Randomized pointwise check of the four multiplier identities.
#[derive(Clone, Debug, Serialize)]
pub struct IdentitySuiteSpec {
    pub n: usize,
    /// Coefficient draws; each draw also picks a test function, potential, `λ` and `ε`.
    pub trials: usize,
    pub points: usize,
    pub seed: u64,
    /// Fixed coefficients instead of random draws.
    pub preset: Option<String>,
    pub surface_margin: f64,
    /// Every `fd_every`-th point is also checked against difference quotients.
    pub fd_every: usize,
    pub fd_step: f64,
}

impl Default for IdentitySuiteSpec {
    fn default() -> Self {
        Self {
            n: 3,
            trials: 20,
            points: 1000,
            seed: 0,
            preset: None,
            surface_margin: DEFAULT_SURFACE_MARGIN,
            fd_every: 10,
            fd_step: 1e-4,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct IdentitySuiteReport {
    pub id1: f64,
    pub id2: f64,
    pub morid: f64,
    pub morid2: f64,
    /// Divergence of the `Q` and `P` fields against centred differences.
    pub fd_q: f64,
    pub fd_p: f64,
    pub points: usize,
    pub fd_points: usize,
}

impl IdentitySuiteReport {
    fn merge(mut self, o: &Self) -> Self {
        self.id1 = self.id1.max(o.id1);
        self.id2 = self.id2.max(o.id2);
        self.morid = self.morid.max(o.morid);
        self.morid2 = self.morid2.max(o.morid2);
        self.fd_q = self.fd_q.max(o.fd_q);
        self.fd_p = self.fd_p.max(o.fd_p);
        self.points += o.points;
        self.fd_points += o.fd_points;
        self
    }

    pub fn worst_identity(&self) -> f64 {
        self.id1.max(self.id2).max(self.morid).max(self.morid2)
    }

    pub fn worst_fd(&self) -> f64 {
        self.fd_q.max(self.fd_p)
    }
}

fn sample_point<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = crate::fields::norm(&v);
        if r > 1e-3 && r <= 1.0 {
            let t = rng.gen_range(0.05..3.5);
            return v.iter().map(|c| c * t / r).collect();
        }
    }
}

fn one_trial(spec: &IdentitySuiteSpec, trial: usize) -> Result<IdentitySuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_mul(0x9e37_79b9).wrapping_add(trial as u64));
    let coeffs = match &spec.preset {
        Some(id) => presets::build(id, &PresetParams::default())?,
        None => random_coefficients(spec.n, &mut rng, 0.2),
    };
    let n = coeffs.n;
    let v = TestFunction::random(n, &mut rng, 1.0, 2.0);
    let pot = ComplexPotential {
        re: random_scalar(n, &mut rng, 0.5),
        im: random_scalar(n, &mut rng, 0.5),
    };
    let lambda = rng.gen_range(-2.0..5.0);
    let eps = rng.gen_range(-1.0..1.0);
    let psi = Psi::Radial(Weight::new(1.0, n)?);
    let phis = [Phi::Zero, Phi::One, Phi::Tent { radius: 1.0 }];
    let mut out = IdentitySuiteReport::default();
    let mut k = 0;
    while out.points < spec.points {
        let phi = phis[k % phis.len()];
        let probe = Probe::new(&v, &coeffs, &psi, phi).with_margin(spec.surface_margin);
        let x = sample_point(&mut rng, n);
        if probe.check_point(&x).is_err() {
            continue;
        }
        let a = probe.prop21(&pot, &x)?;
        let b = probe.thm22(lambda, eps, &x)?;
        out.id1 = out.id1.max(a.first.relative());
        out.id2 = out.id2.max(a.second.relative());
        out.morid = out.morid.max(b.first.relative());
        out.morid2 = out.morid2.max(b.second.relative());
        let fd_room = probe
            .with_margin(spec.surface_margin + 4.0 * spec.fd_step)
            .check_point(&x)
            .is_ok();
        if spec.fd_every > 0 && k % spec.fd_every == 0 && fd_room {
            let (dq, dp) = probe.divergences(lambda, eps, &x)?;
            let (fq, fp) = probe.fd_divergences(lambda, eps, &x, spec.fd_step)?;
            out.fd_q = out.fd_q.max((dq - fq).norm() / b.first.scale.max(1e-300));
            out.fd_p = out.fd_p.max((dp - fp).norm() / b.second.scale.max(1e-300));
            out.fd_points += 1;
        }
        out.points += 1;
        k += 1;
    }
    Ok(out)
}

/// Worst relative residual of each identity over all draws and points.
pub fn run_identity_suite(spec: &IdentitySuiteSpec) -> Result<IdentitySuiteReport> {
    let parts: Vec<Result<IdentitySuiteReport>> =
        (0..spec.trials).into_par_iter().map(|t| one_trial(spec, t)).collect();
    let mut total = IdentitySuiteReport::default();
    for p in parts {
        total = total.merge(&p?);
    }
    Ok(total)
}
