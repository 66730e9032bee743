use super::identities::{alpha_from_jets, apply_a, flux, Probe};
use super::weight::{Phi, Psi, Weight, DEFAULT_SURFACE_MARGIN};
use crate::conditions::Constants;
use crate::error::{Error, Result};
use crate::fields::{covariant_grad, japanese, norm, CoefficientSet, DomainSpec, MatrixField, TestFunction};
use crate::jet::RJet;
use crate::quadrature::sphere_area;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

fn check_radius(w: &Weight, x: &[f64], margin: f64) -> Result<f64> {
    let r = norm(x);
    if r == 0.0 {
        return Err(Error::OriginPoint);
    }
    if w.near_surface(r, margin) {
        return Err(Error::SurfaceProximity { r, radius: w.radius });
    }
    Ok(r)
}

/// `â = a x̂·x̂`, `ā = tr a`, `|a|²_HS`, `|a x̂|²`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Traces {
    pub hat: f64,
    pub bar: f64,
    pub hs2: f64,
    pub ax2: f64,
}

pub fn traces(a: &DMatrix<f64>, x: &[f64]) -> Traces {
    let n = x.len();
    let r = norm(x);
    let u = nalgebra::DVector::from_iterator(n, x.iter().map(|c| c / r));
    let au = a * &u;
    Traces {
        hat: u.dot(&au),
        bar: a.trace(),
        hs2: a.iter().map(|c| c * c).sum(),
        ax2: au.norm_squared(),
    }
}

/// `Aψ = âψ'' + (ā − â)ψ'/|x| + a_{ℓm;ℓ} x̂_m ψ'` for the radial weight.
pub fn apsi_closed_form(a: &MatrixField, w: &Weight, x: &[f64]) -> Result<f64> {
    let r = check_radius(w, x, 0.0)?;
    let n = x.len();
    let jets = a.jets(x, 1);
    let m = DMatrix::from_fn(n, n, |i, j| jets[i * n + j].value());
    let t = traces(&m, x);
    let d = w.radial(r);
    let mut div = 0.0;
    for l in 0..n {
        for mm in 0..n {
            div += jets[l * n + mm].d(l) * x[mm] / r;
        }
    }
    Ok(t.hat * d[2] + (t.bar - t.hat) * d[1] / r + div * d[1])
}

/// `[A^b, ψ]v̄` with `Aψ` in closed form.
pub fn commutator_closed_form(v: &TestFunction, coeffs: &CoefficientSet, w: &Weight, x: &[f64]) -> Result<Complex64> {
    let r = check_radius(w, x, DEFAULT_SURFACE_MARGIN)?;
    let apsi = apsi_closed_form(&coeffs.a, w, x)?;
    let a = coeffs.a.value(x);
    let gv = covariant_grad(v, &coeffs.b, x);
    let d1 = w.radial(r)[1];
    let n = x.len();
    let mut s = apsi * v.value(x).conj();
    for j in 0..n {
        let mut ag = 0.0;
        for k in 0..n {
            ag += a[(j, k)] * x[k] / r * d1;
        }
        s += 2.0 * ag * gv[j].conj();
    }
    Ok(s)
}

#[derive(Clone, Debug, Serialize)]
pub struct AlphaSplit {
    pub alpha: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

impl AlphaSplit {
    /// `max |α − s − r|`.
    pub fn mismatch(&self) -> f64 {
        (&self.alpha - &self.s - &self.r).abs().max()
    }
}

pub fn alpha_and_split(coeffs: &CoefficientSet, w: &Weight, x: &[f64]) -> Result<AlphaSplit> {
    let r = check_radius(w, x, 0.0)?;
    let n = x.len();
    let x3 = RJet::variables(x, 3);
    let a = coeffs.a.0.jets_at(&x3);
    let psi = w.jet(&RJet::variables(x, 2));
    let alpha = alpha_from_jets(&a, &flux(&a, &psi));
    let d = w.radial(r);
    let u: Vec<f64> = x.iter().map(|c| c / r).collect();
    let av = |j: usize, k: usize| a[j * n + k].value();
    let ad = |j: usize, k: usize, l: usize| a[j * n + k].d(l);
    let s = DMatrix::from_fn(n, n, |l, m| {
        let mut t = 0.0;
        for j in 0..n {
            for k in 0..n {
                t += 2.0 * av(j, m) * av(l, k) * u[j] * u[k] * (d[2] - d[1] / r);
            }
            t += 2.0 * av(j, m) * av(j, l) * d[1] / r;
        }
        t
    });
    let rm = DMatrix::from_fn(n, n, |l, m| {
        let mut t = 0.0;
        for j in 0..n {
            for k in 0..n {
                t += (2.0 * av(j, m) * ad(l, k, j) - av(j, k) * ad(l, m, j)) * u[k] * d[1];
            }
        }
        t
    });
    Ok(AlphaSplit {
        alpha: DMatrix::from_row_slice(n, n, &alpha),
        s,
        r: rm,
    })
}

/// `3N C_a ⟨x⟩^{−1−δ}`, the bound on `|r(ξ,ξ)|/|ξ|²`.
pub fn r_matrix_bound(c: &Constants, x: &[f64]) -> f64 {
    3.0 * c.big_n * c.c_a * japanese(norm(x)).powf(-1.0 - c.delta)
}

/// `(n−1)ν²/(nR)`, the lower bound of `s` on `|x| ≤ R`.
pub fn s_matrix_floor(nu: f64, w: &Weight) -> f64 {
    let n = w.n as f64;
    (n - 1.0) * nu * nu / (n * w.radius)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SRDecomposition {
    pub a2psi: f64,
    pub s: f64,
    pub rrem: f64,
    /// Coefficient of `δ_{|x|=R}` in `S`: `−(n−1)â²/(2R²)`.
    pub surface_coefficient: f64,
    pub traces: Traces,
}

/// Regular part of `S(x)` from the trace invariants of `a(x)`.
pub fn s_regular(t: &Traces, w: &Weight, r: f64) -> f64 {
    let d = w.radial(r);
    let (h, b) = (t.hat, t.bar);
    h * h * d[4]
        + (2.0 * b * h - 6.0 * h * h + 4.0 * t.ax2) * d[3] / r
        + (2.0 * t.hs2 + b * b - 6.0 * b * h + 15.0 * h * h - 12.0 * t.ax2) * (d[2] / (r * r) - d[1] / (r * r * r))
}

/// `S(x)` for `|x| > R` written out with the weight substituted.
pub fn s_outer(t: &Traces, w: &Weight, r: f64) -> f64 {
    let n = w.n as f64;
    let (h, b) = (t.hat, t.bar);
    let q = (w.radius / r).powi(w.n as i32 - 1);
    let tail = q / (r * r * r);
    (n - 1.0) * ((n + 3.0) / 2.0 * h - b) * h * tail
        - 2.0 * (n - 1.0) * (t.ax2 - h * h) * tail
        - (2.0 * t.hs2 + b * b - 6.0 * b * h + 15.0 * h * h - 12.0 * t.ax2) * (1.0 - q) / (2.0 * r * r * r)
}

pub fn s_r_decomposition(coeffs: &CoefficientSet, w: &Weight, x: &[f64]) -> Result<SRDecomposition> {
    let r = check_radius(w, x, DEFAULT_SURFACE_MARGIN)?;
    let n = x.len();
    let a = coeffs.a.0.jets_at(&RJet::variables(x, 3));
    let psi = w.jet(&RJet::variables(x, 4));
    let a2psi = apply_a(&a, &apply_a(&a, &psi)).value();
    let m = DMatrix::from_fn(n, n, |i, j| a[i * n + j].value());
    let t = traces(&m, x);
    let s = s_regular(&t, w, r);
    Ok(SRDecomposition {
        a2psi,
        s,
        rrem: a2psi - s,
        surface_coefficient: -(w.n as f64 - 1.0) * t.hat * t.hat / (2.0 * w.radius * w.radius),
        traces: t,
    })
}

/// `12nC_a(N+C_a)/(|x|⟨x⟩^{1+δ}(R∨|x|))`.
pub fn remainder_bound(c: &Constants, w: &Weight, r: f64) -> f64 {
    12.0 * c.n as f64 * c.c_a * (c.big_n + c.c_a) / (r * japanese(r).powf(1.0 + c.delta) * w.radius.max(r))
}

/// Upper bound for `S` on `|x| ≥ R` under the spectral-ratio condition.
pub fn s_bound_ratio(c: &Constants, w: &Weight, hat: f64, r: f64) -> f64 {
    let n = w.n as f64;
    (n - 1.0) * ((n + 3.0) / 2.0 * c.big_n - n * c.nu) * hat * w.radius.powi(w.n as i32 - 1) / r.powi(w.n as i32 + 2)
}

/// Upper bound for `S` on `|x| > R` for perturbations of the identity in dimension 3.
pub fn s_bound_perturbative(c: &Constants, w: &Weight, r: f64) -> f64 {
    24.0 * c.c_i * (w.radius * w.radius / r.powi(5) + 1.0 / (r.powi(3) * japanese(r).powf(c.delta)))
}

#[derive(Clone, Debug, Serialize)]
pub struct MultiplierTerms {
    pub q: Vec<Complex64>,
    pub p: Vec<Complex64>,
    pub alpha: DMatrix<f64>,
    pub apsi: f64,
    pub s: f64,
    pub rrem: f64,
    pub s_matrix: DMatrix<f64>,
    pub r_matrix: DMatrix<f64>,
}

#[allow(clippy::too_many_arguments)]
pub fn multiplier_terms(
    v: &TestFunction,
    coeffs: &CoefficientSet,
    w: &Weight,
    phi: Phi,
    lambda: f64,
    eps: f64,
    x: &[f64],
) -> Result<MultiplierTerms> {
    let psi = Psi::Radial(*w);
    let probe = Probe::new(v, coeffs, &psi, phi);
    let q = probe.q_values(lambda, eps, x)?;
    let p = probe.p_values(lambda, eps, x)?;
    let split = alpha_and_split(coeffs, w, x)?;
    let sr = s_r_decomposition(coeffs, w, x)?;
    Ok(MultiplierTerms {
        q,
        p,
        alpha: split.alpha,
        apsi: apsi_closed_form(&coeffs.a, w, x)?,
        s: sr.s,
        rrem: sr.rrem,
        s_matrix: split.s,
        r_matrix: split.r,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MagneticTerm {
    pub value: f64,
    pub bound: f64,
}

impl MagneticTerm {
    pub fn ratio(&self) -> f64 {
        if self.bound == 0.0 {
            if self.value == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.value.abs() / self.bound
        }
    }
}

/// `I_b = 2Im[(db·ax̂)·(a∇ᵇv) v̄ ψ']` with the bound `N²|db||∇ᵇv||v|`.
pub fn magnetic_term(
    v: &TestFunction,
    coeffs: &CoefficientSet,
    w: &Weight,
    x: &[f64],
    big_n: f64,
) -> Result<MagneticTerm> {
    let r = check_radius(w, x, 0.0)?;
    let n = x.len();
    let a = coeffs.a.value(x);
    let db = coeffs.b.db(x);
    let gv = covariant_grad(v, &coeffs.b, x);
    let val = v.value(x);
    let d1 = w.radial(r)[1];
    let mut s = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let mut agv = Complex64::new(0.0, 0.0);
        for k in 0..n {
            agv += a[(j, k)] * gv[k];
        }
        for l in 0..n {
            let mut axl = 0.0;
            for m in 0..n {
                axl += a[(l, m)] * x[m] / r;
            }
            s += agv * db[(j, l)] * axl * d1 * val.conj();
        }
    }
    let gnorm = gv.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let dbn = if db.iter().all(|c| *c == 0.0) {
        0.0
    } else {
        db.singular_values().max()
    };
    Ok(MagneticTerm {
        value: 2.0 * s.im,
        bound: big_n * big_n * dbn * gnorm * val.norm(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundaryTerm {
    pub value: f64,
    pub max_integrand: f64,
    pub samples: usize,
}

impl BoundaryTerm {
    pub fn nonpositive(&self) -> bool {
        self.max_integrand <= 0.0
    }
}

/// Surface quadrature of `|ν·∇v|² a(ν,ν) a(x̂,ν) ψ'` over the obstacle boundary.
/// `dnu(x, ν)` supplies the normal derivative; samples come from a radial parametrization
/// with equal direction weights.
pub fn boundary_term(
    domain: &DomainSpec,
    a: &MatrixField,
    dnu: &dyn Fn(&[f64], &[f64]) -> Complex64,
    w: &Weight,
    directions: usize,
) -> Result<BoundaryTerm> {
    let n = a.dim();
    if domain.is_empty() {
        return Ok(BoundaryTerm {
            value: 0.0,
            max_integrand: 0.0,
            samples: 0,
        });
    }
    let samples = domain.boundary_samples(n, directions, 0x5eed)?;
    let base = sphere_area(n) / directions as f64;
    let mut value = 0.0;
    let mut max_integrand = f64::NEG_INFINITY;
    for s in &samples {
        let r = norm(&s.point);
        let u: Vec<f64> = s.point.iter().map(|c| c / r).collect();
        let m = a.value(&s.point);
        let form = |p: &[f64], q: &[f64]| -> f64 {
            let mut t = 0.0;
            for i in 0..n {
                for j in 0..n {
                    t += m[(i, j)] * p[j] * q[i];
                }
            }
            t
        };
        let cos = u.iter().zip(&s.normal).map(|(a, b)| a * b).sum::<f64>().abs();
        if cos < 1e-12 {
            return Err(Error::DegenerateNormal { point: s.point.clone() });
        }
        let integrand =
            dnu(&s.point, &s.normal).norm_sqr() * form(&s.normal, &s.normal) * form(&u, &s.normal) * w.radial(r)[1];
        max_integrand = max_integrand.max(integrand);
        value += base * r.powi(n as i32 - 1) / cos * integrand;
    }
    Ok(BoundaryTerm {
        value,
        max_integrand,
        samples: samples.len(),
    })
}
