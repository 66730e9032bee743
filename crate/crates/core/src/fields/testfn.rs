use crate::jet::{CJet, RJet};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// `amp · x^monomial · exp(−|x−center|²/σ²) · exp(i wave·x)`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GaussTerm {
    pub amp: [f64; 2],
    pub center: Vec<f64>,
    pub sigma: f64,
    pub monomial: Vec<u8>,
    pub wave: Vec<f64>,
}

/// Septic smootherstep in `|x|`, vanishing on `|x| ≤ r0` and equal to 1 on `|x| ≥ r1`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct RadialCutoff {
    pub r0: f64,
    pub r1: f64,
}

const SMOOTHERSTEP: [f64; 8] = [0.0, 0.0, 0.0, 0.0, 35.0, -84.0, 70.0, -20.0];

fn poly_derivs(coefs: &[f64], t: f64, upto: usize) -> Vec<f64> {
    let mut c = coefs.to_vec();
    let mut out = Vec::with_capacity(upto + 1);
    for _ in 0..=upto {
        out.push(c.iter().rev().fold(0.0, |acc, &a| acc * t + a));
        c = c.iter().enumerate().skip(1).map(|(i, &a)| a * i as f64).collect();
        if c.is_empty() {
            c.push(0.0);
        }
    }
    out
}

impl RadialCutoff {
    /// Value and first `upto` derivatives in r.
    pub fn derivs(&self, r: f64, upto: usize) -> Vec<f64> {
        let w = self.r1 - self.r0;
        let t = (r - self.r0) / w;
        if t <= 0.0 {
            return vec![0.0; upto + 1];
        }
        if t >= 1.0 {
            let mut v = vec![0.0; upto + 1];
            v[0] = 1.0;
            return v;
        }
        poly_derivs(&SMOOTHERSTEP, t, upto)
            .into_iter()
            .enumerate()
            .map(|(k, d)| d / w.powi(k as i32))
            .collect()
    }

    pub fn value(&self, r: f64) -> f64 {
        self.derivs(r, 0)[0]
    }

    pub fn jet(&self, xs: &[RJet]) -> RJet {
        let r = super::radius_jet(xs);
        r.compose(&self.derivs(r.value(), r.order()))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Default)]
pub struct TestFunctionSpec {
    pub terms: Vec<GaussTerm>,
    #[serde(default)]
    pub cutoff: Option<RadialCutoff>,
}

pub type CustomFn = Arc<dyn Fn(&[RJet]) -> CJet + Send + Sync>;

#[derive(Clone)]
enum Repr {
    Catalog(TestFunctionSpec),
    Custom(CustomFn),
}

/// Complex test function with exact derivatives.
#[derive(Clone)]
pub struct TestFunction {
    n: usize,
    repr: Repr,
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.repr {
            Repr::Catalog(s) => f
                .debug_struct("TestFunction")
                .field("n", &self.n)
                .field("spec", s)
                .finish(),
            Repr::Custom(_) => f
                .debug_struct("TestFunction")
                .field("n", &self.n)
                .field("custom", &true)
                .finish(),
        }
    }
}

fn cdot(z: Complex64, s: f64) -> Complex64 {
    z * s
}

impl TestFunction {
    pub fn from_spec(n: usize, spec: TestFunctionSpec) -> Self {
        for t in &spec.terms {
            assert_eq!(t.center.len(), n);
            assert_eq!(t.monomial.len(), n);
            assert_eq!(t.wave.len(), n);
        }
        Self {
            n,
            repr: Repr::Catalog(spec),
        }
    }

    pub fn custom(n: usize, f: CustomFn) -> Self {
        Self {
            n,
            repr: Repr::Custom(f),
        }
    }

    pub fn constant(n: usize, value: Complex64) -> Self {
        Self::custom(
            n,
            Arc::new(move |xs: &[RJet]| CJet::constant(xs.len(), xs[0].order(), value)),
        )
    }

    /// `e^{−|x|²/σ²}`.
    pub fn gaussian(n: usize, sigma: f64) -> Self {
        Self::from_spec(
            n,
            TestFunctionSpec {
                terms: vec![GaussTerm {
                    amp: [1.0, 0.0],
                    center: vec![0.0; n],
                    sigma,
                    monomial: vec![0; n],
                    wave: vec![0.0; n],
                }],
                cutoff: None,
            },
        )
    }

    /// `e^{ik·x}`.
    pub fn plane_wave(k: &[f64]) -> Self {
        let k = k.to_vec();
        let n = k.len();
        Self::custom(
            n,
            Arc::new(move |xs: &[RJet]| {
                let mut phase = xs[0].scale(k[0]);
                for (x, kk) in xs.iter().zip(&k).skip(1) {
                    phase = &phase + &x.scale(*kk);
                }
                phase.to_complex().mul_coef(Complex64::new(0.0, 1.0)).exp()
            }),
        )
    }

    pub fn with_cutoff(self, cutoff: RadialCutoff) -> Self {
        match self.repr {
            Repr::Catalog(mut spec) => {
                spec.cutoff = Some(cutoff);
                Self {
                    n: self.n,
                    repr: Repr::Catalog(spec),
                }
            }
            Repr::Custom(f) => Self::custom(self.n, Arc::new(move |xs: &[RJet]| f(xs).mul_real(&cutoff.jet(xs)))),
        }
    }

    /// Random catalog function: 1–3 terms, centers within `spread`, degree ≤ 2 monomials.
    pub fn random<R: Rng>(n: usize, rng: &mut R, spread: f64, max_wave: f64) -> Self {
        let nterms = rng.gen_range(1..=3);
        let terms = (0..nterms)
            .map(|_| {
                let mut monomial = vec![0u8; n];
                let degree = rng.gen_range(0..=2);
                for _ in 0..degree {
                    monomial[rng.gen_range(0..n)] += 1;
                }
                GaussTerm {
                    amp: [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                    center: (0..n).map(|_| rng.gen_range(-spread..spread)).collect(),
                    sigma: rng.gen_range(0.4..2.0),
                    monomial,
                    wave: (0..n).map(|_| rng.gen_range(-max_wave..max_wave)).collect(),
                }
            })
            .collect();
        Self::from_spec(n, TestFunctionSpec { terms, cutoff: None })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn spec(&self) -> Option<&TestFunctionSpec> {
        match &self.repr {
            Repr::Catalog(s) => Some(s),
            Repr::Custom(_) => None,
        }
    }

    /// True when every term is centered at the origin with no monomial or phase.
    pub fn is_radial(&self) -> bool {
        match &self.repr {
            Repr::Catalog(s) => s.terms.iter().all(|t| {
                t.center.iter().all(|&c| c == 0.0)
                    && t.monomial.iter().all(|&m| m == 0)
                    && t.wave.iter().all(|&k| k == 0.0)
            }),
            Repr::Custom(_) => false,
        }
    }

    pub fn jet(&self, x: &[f64], order: usize) -> CJet {
        self.jet_at(&RJet::variables(x, order))
    }

    pub fn jet_at(&self, xs: &[RJet]) -> CJet {
        match &self.repr {
            Repr::Custom(f) => f(xs),
            Repr::Catalog(spec) => {
                let n = xs.len();
                let order = xs[0].order();
                let mut acc = CJet::zero(n, order);
                for t in &spec.terms {
                    let mut q = RJet::zero(n, order);
                    let mut phase = RJet::zero(n, order);
                    let mut mono = RJet::constant(n, order, 1.0);
                    for d in 0..n {
                        let dx = xs[d].add_const(-t.center[d]);
                        q = &q + &dx.mul_jet(&dx);
                        phase = &phase + &xs[d].scale(t.wave[d]);
                        for _ in 0..t.monomial[d] {
                            mono = mono.mul_jet(&xs[d]);
                        }
                    }
                    let expo = &q.scale(-1.0 / (t.sigma * t.sigma)).to_complex()
                        + &phase.to_complex().mul_coef(Complex64::new(0.0, 1.0));
                    let term = expo.exp().mul_real(&mono).mul_coef(Complex64::new(t.amp[0], t.amp[1]));
                    acc = &acc + &term;
                }
                if let Some(c) = spec.cutoff {
                    acc = acc.mul_real(&c.jet(xs));
                }
                acc
            }
        }
    }

    pub fn value(&self, x: &[f64]) -> Complex64 {
        match &self.repr {
            Repr::Custom(_) => self.jet(x, 0).value(),
            Repr::Catalog(_) => self.value_grad_impl(x, false).0,
        }
    }

    /// Value and gradient, closed form for catalog functions.
    pub fn value_grad(&self, x: &[f64]) -> (Complex64, Vec<Complex64>) {
        match &self.repr {
            Repr::Custom(_) => {
                let j = self.jet(x, 1);
                (j.value(), j.gradient())
            }
            Repr::Catalog(_) => self.value_grad_impl(x, true),
        }
    }

    fn value_grad_impl(&self, x: &[f64], want_grad: bool) -> (Complex64, Vec<Complex64>) {
        let Repr::Catalog(spec) = &self.repr else {
            unreachable!()
        };
        let n = self.n;
        let zero = Complex64::new(0.0, 0.0);
        let mut val = zero;
        let mut grad = vec![zero; if want_grad { n } else { 0 }];
        let chi = spec.cutoff.map(|c| {
            let r = super::norm(x);
            (c.derivs(r, 1), r)
        });
        if let Some((d, _)) = &chi {
            if d[0] == 0.0 && d[1] == 0.0 {
                return (zero, grad);
            }
        }
        for t in &spec.terms {
            let s2 = t.sigma * t.sigma;
            let mut q = 0.0;
            let mut ph = 0.0;
            let mut m = 1.0;
            for d in 0..n {
                let dx = x[d] - t.center[d];
                q += dx * dx;
                ph += t.wave[d] * x[d];
                m *= x[d].powi(t.monomial[d] as i32);
            }
            let e = Complex64::new(t.amp[0], t.amp[1]) * Complex64::from_polar((-q / s2).exp(), ph);
            val += e * m;
            if want_grad {
                for d in 0..n {
                    let dm = if t.monomial[d] == 0 {
                        0.0
                    } else {
                        let mut p = t.monomial[d] as f64 * x[d].powi(t.monomial[d] as i32 - 1);
                        for o in 0..n {
                            if o != d {
                                p *= x[o].powi(t.monomial[o] as i32);
                            }
                        }
                        p
                    };
                    let de = Complex64::new(-2.0 * (x[d] - t.center[d]) / s2, t.wave[d]);
                    grad[d] += e * (de * m + dm);
                }
            }
        }
        if let Some((d, r)) = chi {
            if want_grad {
                for k in 0..n {
                    let radial = if r > 0.0 { d[1] * x[k] / r } else { 0.0 };
                    grad[k] = cdot(grad[k], d[0]) + cdot(val, radial);
                }
            }
            val = cdot(val, d[0]);
        }
        (val, grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn closed_form_gradient_matches_jets() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let v = TestFunction::random(3, &mut rng, 1.5, 2.0).with_cutoff(RadialCutoff { r0: 0.5, r1: 1.5 });
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let (val, grad) = v.value_grad(&x);
            let j = v.jet(&x, 1);
            assert!((val - j.value()).norm() < 1e-13);
            for k in 0..3 {
                assert!((grad[k] - j.d(k)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn cutoff_is_c3_at_both_ends() {
        let c = RadialCutoff { r0: 1.0, r1: 2.0 };
        let lo = c.derivs(1.0 + 1e-9, 3);
        let hi = c.derivs(2.0 - 1e-9, 3);
        assert!(lo.iter().all(|d| d.abs() < 1e-6));
        assert!((hi[0] - 1.0).abs() < 1e-12);
        assert!(hi[1..].iter().all(|d| d.abs() < 1e-6));
    }
}
