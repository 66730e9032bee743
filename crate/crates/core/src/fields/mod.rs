//! Coefficient fields, exterior domains and analytic test functions.
//!
//! Every field is evaluated through Taylor jets, so derivatives of any order
//! up to the jet order are exact for analytic presets. Fields built from
//! plain value closures get their jets from finite differences instead.

mod domain;
mod fd;
pub mod presets;
mod testfn;

pub use domain::{dumbbell, fibonacci_sphere, starshaped_check, BoundarySample, DomainSpec, StarshapedReport};
pub use fd::fd_jets;
pub use testfn::{GaussTerm, RadialCutoff, TestFunction, TestFunctionSpec};

use crate::error::{Error, Result};
use crate::jet::{CJet, RJet};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use std::sync::Arc;

pub type JetFn = Arc<dyn Fn(&[RJet]) -> Vec<RJet> + Send + Sync>;
pub type ValueFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A point of ℝⁿ with the derived quantities used throughout.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Point {
    pub coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.coords)
    }

    /// `⟨x⟩ = √(1+|x|²)`.
    pub fn japanese(&self) -> f64 {
        japanese(self.norm())
    }

    /// `x/|x|`, undefined at the origin.
    pub fn hat(&self) -> Result<Vec<f64>> {
        let r = self.norm();
        if r == 0.0 {
            return Err(Error::OriginPoint);
        }
        Ok(self.coords.iter().map(|c| c / r).collect())
    }
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn japanese(r: f64) -> f64 {
    (1.0 + r * r).sqrt()
}

/// `|x|` as a jet.
pub fn radius_jet(xs: &[RJet]) -> RJet {
    RJet::sum_squares(xs).sqrt()
}

/// `⟨x⟩` as a jet.
pub fn japanese_jet(xs: &[RJet]) -> RJet {
    RJet::sum_squares(xs).add_const(1.0).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Analytic,
    FiniteDifference,
}

#[derive(Clone)]
enum Repr {
    Constant(Vec<f64>),
    Analytic(JetFn),
    Numeric(ValueFn),
}

/// A smooth map ℝⁿ → ℝᵐ with jet access.
#[derive(Clone)]
pub struct Field {
    n: usize,
    outputs: usize,
    repr: Repr,
}

impl std::fmt::Debug for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.repr {
            Repr::Constant(_) => "constant",
            Repr::Analytic(_) => "analytic",
            Repr::Numeric(_) => "numeric",
        };
        f.debug_struct("Field")
            .field("n", &self.n)
            .field("outputs", &self.outputs)
            .field("kind", &kind)
            .finish()
    }
}

impl Field {
    pub fn constant(n: usize, values: Vec<f64>) -> Self {
        Self {
            n,
            outputs: values.len(),
            repr: Repr::Constant(values),
        }
    }

    pub fn analytic(n: usize, outputs: usize, f: JetFn) -> Self {
        Self {
            n,
            outputs,
            repr: Repr::Analytic(f),
        }
    }

    pub fn numeric(n: usize, outputs: usize, f: ValueFn) -> Self {
        Self {
            n,
            outputs,
            repr: Repr::Numeric(f),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn provenance(&self) -> Provenance {
        match self.repr {
            Repr::Numeric(_) => Provenance::FiniteDifference,
            _ => Provenance::Analytic,
        }
    }

    pub fn constant_values(&self) -> Option<&[f64]> {
        match &self.repr {
            Repr::Constant(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.repr, Repr::Constant(_))
    }

    pub fn values(&self, x: &[f64]) -> Vec<f64> {
        match &self.repr {
            Repr::Constant(v) => v.clone(),
            Repr::Analytic(f) => f(&RJet::variables(x, 0)).iter().map(|j| j.value()).collect(),
            Repr::Numeric(f) => f(x),
        }
    }

    /// Output jets of the given order at `x`.
    pub fn jets(&self, x: &[f64], order: usize) -> Vec<RJet> {
        match &self.repr {
            Repr::Constant(v) => v.iter().map(|&c| RJet::constant(self.n, order, c)).collect(),
            Repr::Analytic(f) => f(&RJet::variables(x, order)),
            Repr::Numeric(f) => fd_jets(f.as_ref(), x, self.outputs, order),
        }
    }

    /// Jets evaluated on caller-supplied coordinate jets (analytic and constant fields only;
    /// numeric fields fall back to finite differences at the base point).
    pub fn jets_at(&self, xs: &[RJet]) -> Vec<RJet> {
        let order = xs[0].order();
        match &self.repr {
            Repr::Analytic(f) => f(xs),
            _ => {
                let x: Vec<f64> = xs.iter().map(|j| j.value()).collect();
                self.jets(&x, order)
            }
        }
    }
}

/// Symmetric matrix field `a(x)`, stored row-major.
#[derive(Clone, Debug)]
pub struct MatrixField(pub Field);

impl MatrixField {
    pub fn constant(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let mut v = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                v.push(m[(i, j)]);
            }
        }
        Self(Field::constant(n, v))
    }

    pub fn identity(n: usize) -> Self {
        Self::constant(&DMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn value(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_row_slice(n, n, &self.0.values(x))
    }

    pub fn jets(&self, x: &[f64], order: usize) -> Vec<RJet> {
        self.0.jets(x, order)
    }

    pub fn asymmetry(&self, x: &[f64]) -> f64 {
        let m = self.value(x);
        (&m - m.transpose()).abs().max()
    }

    pub fn provenance(&self) -> Provenance {
        self.0.provenance()
    }

    pub fn is_constant(&self) -> bool {
        self.0.is_constant()
    }
}

/// Real vector field `b(x)`.
#[derive(Clone, Debug)]
pub struct VectorField(pub Field);

impl VectorField {
    pub fn zero(n: usize) -> Self {
        Self(Field::constant(n, vec![0.0; n]))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn value(&self, x: &[f64]) -> Vec<f64> {
        self.0.values(x)
    }

    pub fn jets(&self, x: &[f64], order: usize) -> Vec<RJet> {
        self.0.jets(x, order)
    }

    /// `db_{jℓ} = ∂_j b_ℓ − ∂_ℓ b_j`.
    pub fn db(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        let jets = self.0.jets(x, 1);
        DMatrix::from_fn(n, n, |j, l| jets[l].d(j) - jets[j].d(l))
    }

    pub fn is_zero(&self) -> bool {
        self.0.constant_values().is_some_and(|v| v.iter().all(|&c| c == 0.0))
    }
}

/// Real scalar potential `c(x)`.
#[derive(Clone, Debug)]
pub struct PotentialField(pub Field);

impl PotentialField {
    pub fn zero(n: usize) -> Self {
        Self(Field::constant(n, vec![0.0]))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.0.values(x)[0]
    }

    pub fn jet(&self, x: &[f64], order: usize) -> RJet {
        self.0.jets(x, order).remove(0)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.jet(x, 1).gradient()
    }

    pub fn is_zero(&self) -> bool {
        self.0.constant_values().is_some_and(|v| v[0] == 0.0)
    }
}

/// Radial description `a = α(r)I`, `c = c(r)`, `b = 0`, used by the radial solver.
#[derive(Clone)]
pub struct RadialCoefficients {
    pub alpha: RadialFn,
    pub c: RadialFn,
}

impl std::fmt::Debug for RadialCoefficients {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("RadialCoefficients")
    }
}

#[derive(Clone, Debug)]
pub struct CoefficientSet {
    pub name: String,
    pub n: usize,
    pub delta: f64,
    pub a: MatrixField,
    pub b: VectorField,
    pub c: PotentialField,
    pub radial: Option<RadialCoefficients>,
}

impl CoefficientSet {
    pub fn new(name: impl Into<String>, delta: f64, a: MatrixField, b: VectorField, c: PotentialField) -> Result<Self> {
        let n = a.dim();
        if n < 3 {
            return Err(Error::InvalidInput(format!("dimension n = {n} < 3")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidInput(format!("delta = {delta} outside (0,1)")));
        }
        if b.dim() != n || c.dim() != n || b.0.outputs() != n || a.0.outputs() != n * n {
            return Err(Error::InvalidInput("coefficient dimensions disagree".into()));
        }
        Ok(Self {
            name: name.into(),
            n,
            delta,
            a,
            b,
            c,
            radial: None,
        })
    }

    pub fn with_radial(mut self, radial: RadialCoefficients) -> Self {
        self.radial = Some(radial);
        self
    }

    pub fn identity(n: usize, delta: f64) -> Result<Self> {
        let r = RadialCoefficients {
            alpha: Arc::new(|_| 1.0),
            c: Arc::new(|_| 0.0),
        };
        Ok(Self::new(
            "identity",
            delta,
            MatrixField::identity(n),
            VectorField::zero(n),
            PotentialField::zero(n),
        )?
        .with_radial(r))
    }
}

fn real_to_complex(v: &[RJet]) -> Vec<CJet> {
    v.iter().map(|j| j.to_complex()).collect()
}

/// `∇ᵇv = ∇v + ibv` as jets of one order less than `v`.
pub fn covariant_grad_jets(v: &CJet, b: &[RJet]) -> Vec<CJet> {
    let i = Complex64::new(0.0, 1.0);
    (0..v.nvars())
        .map(|k| {
            let bv = v.mul_real(&b[k]).mul_coef(i);
            &v.deriv(k) + &bv
        })
        .collect()
}

/// `∇v(x) + ib(x)v(x)`.
pub fn covariant_grad(v: &TestFunction, b: &VectorField, x: &[f64]) -> Vec<Complex64> {
    let (val, grad) = v.value_grad(x);
    let bx = b.value(x);
    grad.iter()
        .zip(bx)
        .map(|(g, bk)| g + Complex64::new(0.0, bk) * val)
        .collect()
}

/// `A^b v = ∂ᵇ_j(a_jk ∂ᵇ_k v)` as a jet of order `order` from `v` at order `order + 2`.
pub fn apply_ab_jet(v: &CJet, a: &[RJet], b: &[RJet]) -> CJet {
    let n = v.nvars();
    let i = Complex64::new(0.0, 1.0);
    let w = covariant_grad_jets(v, b);
    let ac = real_to_complex(a);
    let mut out: Option<CJet> = None;
    for j in 0..n {
        let mut flux = ac[j * n].mul_jet(&w[0]);
        for k in 1..n {
            flux = &flux + &ac[j * n + k].mul_jet(&w[k]);
        }
        let term = &flux.deriv(j) + &flux.mul_real(&b[j]).mul_coef(i);
        out = Some(match out {
            None => term,
            Some(acc) => &acc + &term,
        });
    }
    out.expect("n >= 1")
}

/// `A^b v(x)` for an analytic test function.
pub fn apply_ab(v: &TestFunction, coeffs: &CoefficientSet, x: &[f64]) -> Complex64 {
    let vj = v.jet(x, 2);
    let a = coeffs.a.jets(x, 1);
    let b = coeffs.b.jets(x, 1);
    apply_ab_jet(&vj, &a, &b).value()
}

/// `a_jk ∂_j∂_k v + (∂_j a_jk) ∂_k v`, the non-divergence expansion for `b = 0`.
pub fn apply_a_expanded(v: &TestFunction, a: &MatrixField, x: &[f64]) -> Complex64 {
    let n = a.dim();
    let vj = v.jet(x, 2);
    let aj = a.jets(x, 1);
    let mut s = Complex64::new(0.0, 0.0);
    for j in 0..n {
        for k in 0..n {
            let ajk = &aj[j * n + k];
            s += vj.d2(j, k) * ajk.value() + vj.d(k) * ajk.d(j);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covariant_grad_of_constant() {
        let one = TestFunction::constant(3, Complex64::new(1.0, 0.0));
        let g = covariant_grad(&one, &VectorField::zero(3), &[0.3, 0.1, 2.0]);
        assert!(g.iter().all(|z| z.norm() == 0.0));
        let b = VectorField(Field::constant(3, vec![1.0, 0.0, 0.0]));
        let g = covariant_grad(&one, &b, &[0.3, 0.1, 2.0]);
        assert_eq!(g[0], Complex64::new(0.0, 1.0));
        assert_eq!(g[1], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn laplacian_of_gaussian() {
        let coeffs = CoefficientSet::identity(3, 0.5).unwrap();
        let v = TestFunction::gaussian(3, 1.0);
        for x in [[0.3, -0.2, 0.5], [1.0, 1.0, 0.0], [0.0, 0.0, 2.0]] {
            let r2: f64 = x.iter().map(|t| t * t).sum();
            let expected = (4.0 * r2 - 6.0) * (-r2).exp();
            let got = apply_ab(&v, &coeffs, &x);
            assert!((got.re - expected).abs() < 1e-13);
            assert!(got.im.abs() < 1e-15);
        }
    }

    #[test]
    fn plane_wave_symbol() {
        let k = [0.7, -0.4, 1.3];
        let bconst = [0.2, 0.5, -0.1];
        let v = TestFunction::plane_wave(&k);
        let coeffs = CoefficientSet::new(
            "t",
            0.5,
            MatrixField::identity(3),
            VectorField(Field::constant(3, bconst.to_vec())),
            PotentialField::zero(3),
        )
        .unwrap();
        let x = [0.4, 0.9, -1.2];
        let kb2: f64 = k.iter().zip(bconst).map(|(a, b)| (a + b) * (a + b)).sum();
        let got = apply_ab(&v, &coeffs, &x);
        let expected = -kb2 * v.value(&x);
        assert!((got - expected).norm() < 1e-13);
    }
}
