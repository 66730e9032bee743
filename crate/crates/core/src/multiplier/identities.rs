use super::weight::{Phi, Psi, DEFAULT_SURFACE_MARGIN};
use crate::error::{Error, Result};
use crate::fields::{apply_ab_jet, covariant_grad_jets, norm, CoefficientSet, Field, Provenance, TestFunction};
use crate::jet::{CJet, RJet};
use num_complex::Complex64;
use serde::Serialize;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Complex potential `V = re + i·im`.
#[derive(Clone, Debug)]
pub struct ComplexPotential {
    pub re: Field,
    pub im: Field,
}

impl ComplexPotential {
    pub fn real(re: Field) -> Self {
        let n = re.dim();
        Self {
            re,
            im: Field::constant(n, vec![0.0]),
        }
    }

    pub fn constant(n: usize, v: Complex64) -> Self {
        Self {
            re: Field::constant(n, vec![v.re]),
            im: Field::constant(n, vec![v.im]),
        }
    }
}

/// Pointwise identity residual: `|lhs − rhs|` against the sum of the magnitudes of the terms.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Residual {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub abs: f64,
    pub scale: f64,
}

impl Residual {
    fn new(lhs: Complex64, terms: &[Complex64]) -> Self {
        let rhs: Complex64 = terms.iter().sum();
        let scale = lhs.norm() + terms.iter().map(|t| t.norm()).sum::<f64>();
        Self {
            lhs,
            rhs,
            abs: (lhs - rhs).norm(),
            scale,
        }
    }

    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            self.abs
        } else {
            self.abs / self.scale
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct IdentityResiduals {
    pub first: Residual,
    pub second: Residual,
}

/// A test function, coefficients and weights, evaluated pointwise.
#[derive(Clone, Copy)]
pub struct Probe<'a> {
    pub v: &'a TestFunction,
    pub coeffs: &'a CoefficientSet,
    pub psi: &'a Psi,
    pub phi: Phi,
    /// Relative half-width of the excluded annuli around the weight surfaces.
    pub margin: f64,
}

/// Jets of every ingredient at one base point.
pub(crate) struct Local {
    pub n: usize,
    pub v: CJet,
    pub gv: Vec<CJet>,
    pub agv: Vec<CJet>,
    pub a: Vec<RJet>,
    pub b: Vec<RJet>,
    pub psi_flux: Vec<RJet>,
    pub apsi: RJet,
    pub m: CJet,
    pub form: CJet,
    pub v2: RJet,
    pub phi: RJet,
    pub vre: RJet,
    pub vim: RJet,
}

fn vars(x: &[f64], order: usize) -> Vec<RJet> {
    RJet::variables(x, order)
}

/// `Σ_k a_jk ∂_k u` for each `j`.
pub(crate) fn flux(a: &[RJet], u: &RJet) -> Vec<RJet> {
    let n = u.nvars();
    (0..n)
        .map(|j| {
            let mut s = a[j * n].mul_jet(&u.deriv(0));
            for k in 1..n {
                s = &s + &a[j * n + k].mul_jet(&u.deriv(k));
            }
            s
        })
        .collect()
}

fn divergence(f: &[RJet]) -> RJet {
    let mut s = f[0].deriv(0);
    for (j, fj) in f.iter().enumerate().skip(1) {
        s = &s + &fj.deriv(j);
    }
    s
}

/// `A u = ∂_j(a_jk ∂_k u)`, two orders below the lower of `a + 1` and `u`.
pub(crate) fn apply_a(a: &[RJet], u: &RJet) -> RJet {
    divergence(&flux(a, u))
}

fn require(field: &Field, needed: usize) -> Result<()> {
    if field.provenance() == Provenance::FiniteDifference && needed > 2 {
        return Err(Error::MissingDerivative { needed, available: 2 });
    }
    Ok(())
}

impl<'a> Probe<'a> {
    pub fn new(v: &'a TestFunction, coeffs: &'a CoefficientSet, psi: &'a Psi, phi: Phi) -> Self {
        Self {
            v,
            coeffs,
            psi,
            phi,
            margin: DEFAULT_SURFACE_MARGIN,
        }
    }

    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }

    /// Rejects the origin and points close to the weight surfaces.
    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        let r = norm(x);
        let radial = matches!(self.psi, Psi::Radial(_)) || matches!(self.phi, Phi::Tent { .. });
        if radial && r == 0.0 {
            return Err(Error::OriginPoint);
        }
        let mut surfaces = self.phi.kinks();
        if let Some(w) = self.psi.weight() {
            surfaces.push(w.radius);
        }
        for s in surfaces {
            if (r - s).abs() < self.margin * s {
                return Err(Error::SurfaceProximity { r, radius: s });
            }
        }
        Ok(())
    }

    pub(crate) fn local(&self, x: &[f64], vre: RJet, vim: RJet) -> Result<Local> {
        self.check_point(x)?;
        require(&self.coeffs.a.0, 3)?;
        if let Psi::General(f) = self.psi {
            require(f, 4)?;
        }
        let n = x.len();
        let x1 = vars(x, 1);
        let x2 = vars(x, 2);
        let x3 = vars(x, 3);
        let x4 = vars(x, 4);
        let v = self.v.jet_at(&x2);
        let a = self.coeffs.a.0.jets_at(&x3);
        let b = self.coeffs.b.0.jets_at(&x1);
        let psi = self.psi.jet(&x4);
        let phi = self.phi.jet(&x2);
        let gv = covariant_grad_jets(&v, &b);
        let ac: Vec<CJet> = a.iter().map(|j| j.to_complex()).collect();
        let agv: Vec<CJet> = (0..n)
            .map(|j| {
                let mut s = ac[j * n].mul_jet(&gv[0]);
                for k in 1..n {
                    s = &s + &ac[j * n + k].mul_jet(&gv[k]);
                }
                s
            })
            .collect();
        let psi_flux = flux(&a, &psi);
        let apsi = divergence(&psi_flux);
        let vbar = v.conj();
        let mut m = vbar.mul_real(&apsi);
        let mut form = agv[0].mul_jet(&gv[0].conj());
        for j in 0..n {
            m = &m + &gv[j].conj().mul_real(&psi_flux[j]).scale(2.0);
            if j > 0 {
                form = &form + &agv[j].mul_jet(&gv[j].conj());
            }
        }
        let v2 = v.norm_sqr();
        Ok(Local {
            n,
            v,
            gv,
            agv,
            a,
            b,
            psi_flux,
            apsi,
            m,
            form,
            v2,
            phi,
            vre,
            vim,
        })
    }

    fn potential_jets(pot: &ComplexPotential, x: &[f64]) -> (RJet, RJet) {
        let x1 = vars(x, 1);
        (pot.re.jets_at(&x1).remove(0), pot.im.jets_at(&x1).remove(0))
    }

    /// `V = c − λ − iε`.
    fn helmholtz_potential(&self, x: &[f64], lambda: f64, eps: f64) -> (RJet, RJet) {
        let x1 = vars(x, 1);
        let c = self.coeffs.c.0.jets_at(&x1).remove(0);
        let n = x.len();
        (c.add_const(-lambda), RJet::constant(n, 1, -eps))
    }

    /// `[A^b, ψ]v̄ = (Aψ)v̄ + 2a(∇ψ, ∇ᵇv)`.
    pub fn commutator(&self, x: &[f64]) -> Result<Complex64> {
        let n = x.len();
        let z = RJet::zero(n, 1);
        Ok(self.local(x, z.clone(), z)?.m.value())
    }

    /// Oracle for the commutator: `conj(A^b(ψv) − ψA^b v)`.
    pub fn commutator_oracle(&self, x: &[f64]) -> Result<Complex64> {
        self.check_point(x)?;
        let x3 = vars(x, 3);
        let v = self.v.jet_at(&x3);
        let psi = self.psi.jet(&x3);
        let a = self.coeffs.a.0.jets_at(&x3);
        let b = self.coeffs.b.0.jets_at(&x3);
        let psiv = v.mul_real(&psi);
        let lhs = apply_ab_jet(&psiv, &a, &b).value();
        let rhs = apply_ab_jet(&v, &a, &b).value() * psi.value();
        Ok((lhs - rhs).conj())
    }

    pub(crate) fn q_jets(&self, l: &Local, bracket_re: &RJet, bracket_im: &RJet) -> Vec<CJet> {
        let n = l.n;
        let a_apsi = flux(&l.a, &l.apsi);
        let pot = &bracket_re.to_complex() + &bracket_im.to_complex().mul_coef(I);
        let bracket = &pot.mul_real(&l.v2) + &l.form;
        (0..n)
            .map(|j| {
                let t1 = l.agv[j].mul_jet(&l.m);
                let t2 = a_apsi[j].mul_jet(&l.v2).scale(-0.5).to_complex();
                let t3 = bracket.mul_real(&l.psi_flux[j]);
                &(&t1 + &t2) - &t3
            })
            .collect()
    }

    pub(crate) fn p_jets(&self, l: &Local) -> Vec<CJet> {
        let n = l.n;
        let a_phi = flux(&l.a, &l.phi);
        let vbar = l.v.conj();
        (0..n)
            .map(|j| {
                let t1 = l.agv[j].mul_real(&l.phi).mul_jet(&vbar);
                let t2 = a_phi[j].mul_jet(&l.v2).scale(-0.5).to_complex();
                &t1 + &t2
            })
            .collect()
    }

    fn div(q: &[CJet]) -> Complex64 {
        q.iter().enumerate().map(|(j, qj)| qj.d(j)).sum()
    }

    /// `Re Σ α_lm ∂ᵇ_m v conj(∂ᵇ_l v)`.
    fn alpha_term(l: &Local) -> f64 {
        let alpha = alpha_from_jets(&l.a, &l.psi_flux);
        let n = l.n;
        let mut s = 0.0;
        for lo in 0..n {
            for m in 0..n {
                s += alpha[lo * n + m] * (l.gv[m].value() * l.gv[lo].value().conj()).re;
            }
        }
        s
    }

    /// `2 Im[a_jk ∂ᵇ_k v (∂_j b_l − ∂_l b_j) a_lm ∂_m ψ v̄]`.
    fn magnetic(l: &Local) -> f64 {
        let n = l.n;
        let vbar = l.v.value().conj();
        let mut s = Complex64::new(0.0, 0.0);
        for j in 0..n {
            for lo in 0..n {
                let db = l.b[lo].d(j) - l.b[j].d(lo);
                s += l.agv[j].value() * db * l.psi_flux[lo].value() * vbar;
            }
        }
        2.0 * s.im
    }

    /// `a(∇ψ, ∇ᵇv)·v`.
    fn grad_psi_form_v(l: &Local) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for j in 0..l.n {
            s += l.psi_flux[j].value() * l.gv[j].value().conj();
        }
        s * l.v.value()
    }

    fn a2psi(l: &Local) -> f64 {
        apply_a(&l.a, &l.apsi).value()
    }

    fn aphi(l: &Local) -> f64 {
        apply_a(&l.a, &l.phi).value()
    }

    /// `i Im a(∇ᵇv, v∇φ)`.
    fn phi_cross(l: &Local) -> Complex64 {
        let vbar = l.v.value().conj();
        let mut s = Complex64::new(0.0, 0.0);
        for j in 0..l.n {
            s += l.agv[j].value() * vbar * l.phi.d(j);
        }
        I * s.im
    }

    fn abv(&self, l: &Local) -> Complex64 {
        apply_ab_jet(&l.v, &l.a, &l.b).value()
    }

    /// Residuals of the two identities for a general complex potential `V`.
    pub fn prop21(&self, pot: &ComplexPotential, x: &[f64]) -> Result<IdentityResiduals> {
        let (vre, vim) = Self::potential_jets(pot, x);
        let l = self.local(x, vre, vim)?;
        let q = self.q_jets(&l, &l.vre, &l.vim);
        let p = self.p_jets(&l);
        let vval = Complex64::new(l.vre.value(), l.vim.value());
        let v = l.v.value();
        let v2 = l.v2.value();
        let abv = self.abv(&l);
        let mut apsi_gradv = 0.0;
        for j in 0..l.n {
            apsi_gradv += l.psi_flux[j].value() * l.vre.d(j);
        }
        let first_terms = [
            ((abv - vval * v) * l.m.value()).re.into(),
            (-0.5 * Self::a2psi(&l) * v2).into(),
            Self::alpha_term(&l).into(),
            (-apsi_gradv * v2).into(),
            Self::magnetic(&l).into(),
            (-2.0 * l.vim.value() * Self::grad_psi_form_v(&l).im).into(),
        ];
        let first = Residual::new(Self::div(&q).re.into(), &first_terms);
        let second_terms = [
            abv * l.phi.value() * v.conj(),
            l.form.value() * l.phi.value(),
            (-0.5 * Self::aphi(&l) * v2).into(),
            Self::phi_cross(&l),
        ];
        let second = Residual::new(Self::div(&p), &second_terms);
        Ok(IdentityResiduals { first, second })
    }

    /// Residuals of the two Helmholtz identities with `f = A^b v − cv + (λ+iε)v`.
    pub fn thm22(&self, lambda: f64, eps: f64, x: &[f64]) -> Result<IdentityResiduals> {
        let (vre, vim) = self.helmholtz_potential(x, lambda, eps);
        let l = self.local(x, vre, vim)?;
        let n = l.n;
        let zero = RJet::zero(n, 1);
        let q = self.q_jets(&l, &l.vre, &zero);
        let p = self.p_jets(&l);
        let v = l.v.value();
        let v2 = l.v2.value();
        let c = l.vre.value() + lambda;
        let phi = l.phi.value();
        let vval = Complex64::new(c - lambda, -eps);
        let f = self.abv(&l) - vval * v;
        let mut grad_psi_grad_c = 0.0;
        let mut grad_psi_grad_v = Complex64::new(0.0, 0.0);
        for j in 0..n {
            grad_psi_grad_c += l.psi_flux[j].value() * l.vre.d(j);
            grad_psi_grad_v += l.psi_flux[j].value() * l.gv[j].value().conj();
        }
        let apsi = l.apsi.value();
        let first_terms: [Complex64; 8] = [
            (-0.5 * (Self::a2psi(&l) + Self::aphi(&l)) * v2).into(),
            (-(grad_psi_grad_c - c * phi + lambda * phi) * v2).into(),
            Self::alpha_term(&l).into(),
            (l.form.value().re * phi).into(),
            (2.0 * eps * Self::grad_psi_form_v(&l).im).into(),
            Self::magnetic(&l).into(),
            ((apsi + phi) * v.conj() * f).re.into(),
            (2.0 * grad_psi_grad_v * f).re.into(),
        ];
        let lhs = Self::div(&q).re + Self::div(&p).re;
        let first = Residual::new(lhs.into(), &first_terms);
        let second_terms = [
            l.form.value() * phi,
            vval * v2 * phi,
            f * v.conj() * phi,
            (-0.5 * Self::aphi(&l) * v2).into(),
            Self::phi_cross(&l),
        ];
        let second = Residual::new(Self::div(&p), &second_terms);
        Ok(IdentityResiduals { first, second })
    }

    /// `Q_j` at `x` for the Helmholtz setting, as values.
    pub fn q_values(&self, lambda: f64, eps: f64, x: &[f64]) -> Result<Vec<Complex64>> {
        let (vre, vim) = self.helmholtz_potential(x, lambda, eps);
        let l = self.local(x, vre, vim)?;
        let zero = RJet::zero(l.n, 1);
        Ok(self.q_jets(&l, &l.vre, &zero).iter().map(|j| j.value()).collect())
    }

    pub fn p_values(&self, lambda: f64, eps: f64, x: &[f64]) -> Result<Vec<Complex64>> {
        let (vre, vim) = self.helmholtz_potential(x, lambda, eps);
        let l = self.local(x, vre, vim)?;
        Ok(self.p_jets(&l).iter().map(|j| j.value()).collect())
    }

    /// `∂_jQ_j` and `∂_jP_j` from the jets.
    pub fn divergences(&self, lambda: f64, eps: f64, x: &[f64]) -> Result<(Complex64, Complex64)> {
        let (vre, vim) = self.helmholtz_potential(x, lambda, eps);
        let l = self.local(x, vre, vim)?;
        let zero = RJet::zero(l.n, 1);
        Ok((Self::div(&self.q_jets(&l, &l.vre, &zero)), Self::div(&self.p_jets(&l))))
    }

    /// Fourth-order central-difference divergences of `Q` and `P` with step `h_rel·|x|`.
    pub fn fd_divergences(&self, lambda: f64, eps: f64, x: &[f64], h_rel: f64) -> Result<(Complex64, Complex64)> {
        let h = h_rel * norm(x).max(f64::MIN_POSITIVE);
        let mut dq = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        let stencil = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];
        for j in 0..x.len() {
            for (s, w) in stencil {
                let mut y = x.to_vec();
                y[j] += s * h;
                dq += self.q_values(lambda, eps, &y)?[j] * (w / (12.0 * h));
                dp += self.p_values(lambda, eps, &y)?[j] * (w / (12.0 * h));
            }
        }
        Ok((dq, dp))
    }
}

/// `α_lm = 2a_jm ∂_j(a_lk ∂_k ψ) − a_jk ∂_k ψ ∂_j a_lm`, row-major.
pub(crate) fn alpha_from_jets(a: &[RJet], psi_flux: &[RJet]) -> Vec<f64> {
    let n = psi_flux.len();
    let mut out = vec![0.0; n * n];
    for l in 0..n {
        for m in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += 2.0 * a[j * n + m].value() * psi_flux[l].d(j);
                s -= psi_flux[j].value() * a[l * n + m].d(j);
            }
            out[l * n + m] = s;
        }
    }
    out
}

pub fn identity_residual_prop21(
    v: &TestFunction,
    coeffs: &CoefficientSet,
    pot: &ComplexPotential,
    psi: &Psi,
    phi: Phi,
    x: &[f64],
) -> Result<IdentityResiduals> {
    Probe::new(v, coeffs, psi, phi).prop21(pot, x)
}

pub fn identity_residual_thm22(
    v: &TestFunction,
    coeffs: &CoefficientSet,
    lambda: f64,
    eps: f64,
    psi: &Psi,
    phi: Phi,
    x: &[f64],
) -> Result<IdentityResiduals> {
    Probe::new(v, coeffs, psi, phi).thm22(lambda, eps, x)
}
