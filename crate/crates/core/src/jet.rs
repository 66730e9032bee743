//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] carries the Taylor coefficients `f_α = ∂^α f(x₀) / α!` of a
//! function of `nvars` variables for every multi-index with `|α| ≤ order`.
//! Arithmetic on jets propagates derivatives exactly (up to rounding), which
//! is how every coefficient field, test function and weight in this crate
//! exposes closed-form derivatives.
//!
//! Monomials are stored in graded order, so the coefficients of a jet of
//! order `d` are a prefix of the coefficients of the same function at any
//! higher order. Truncation is a slice.

use num_complex::Complex64;
use std::collections::HashMap;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::{Mutex, OnceLock};

/// Scalar type a jet can carry.
pub trait Coef:
    Copy
    + Send
    + Sync
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + 'static
{
    fn zero() -> Self;
    fn from_real(v: f64) -> Self;
    fn scale(self, s: f64) -> Self;
}

impl Coef for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_real(v: f64) -> Self {
        v
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

impl Coef for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn from_real(v: f64) -> Self {
        Complex64::new(v, 0.0)
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

/// Monomial layout and multiplication tables for a given `(nvars, order)`.
#[derive(Debug)]
pub struct JetSpace {
    pub nvars: usize,
    pub order: usize,
    monos: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    /// `(i, j, k)`: coefficient `i` times coefficient `j` lands in `k`.
    mul_table: Vec<(u32, u32, u32)>,
    /// Index of the first monomial of each degree, plus the total length.
    degree_start: Vec<usize>,
}

fn binom(n: usize, k: usize) -> usize {
    let mut r = 1usize;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// Number of monomials of degree `≤ order` in `nvars` variables.
pub fn jet_len(nvars: usize, order: usize) -> usize {
    binom(nvars + order, order)
}

fn monomials_of_degree(nvars: usize, degree: usize) -> Vec<Vec<u8>> {
    // Lexicographically descending exponents, e.g. (2,0,0),(1,1,0),...
    fn rec(nvars: usize, left: usize, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if prefix.len() + 1 == nvars {
            prefix.push(left as u8);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in (0..=left).rev() {
            prefix.push(e as u8);
            rec(nvars, left - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(nvars, degree, &mut Vec::with_capacity(nvars), &mut out);
    out
}

impl JetSpace {
    fn build(nvars: usize, order: usize) -> Self {
        assert!(nvars >= 1, "jets need at least one variable");
        let mut monos = Vec::new();
        let mut degree_start = Vec::new();
        for d in 0..=order {
            degree_start.push(monos.len());
            monos.extend(monomials_of_degree(nvars, d));
        }
        degree_start.push(monos.len());
        let index: HashMap<Vec<u8>, usize> = monos.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        let degree = |m: &Vec<u8>| m.iter().map(|&e| e as usize).sum::<usize>();
        let mut mul_table = Vec::new();
        let mut sum = vec![0u8; nvars];
        for (i, mi) in monos.iter().enumerate() {
            let di = degree(mi);
            for (j, mj) in monos.iter().enumerate() {
                if di + degree(mj) > order {
                    break;
                }
                for v in 0..nvars {
                    sum[v] = mi[v] + mj[v];
                }
                let k = index[&sum];
                mul_table.push((i as u32, j as u32, k as u32));
            }
        }
        Self {
            nvars,
            order,
            monos,
            index,
            mul_table,
            degree_start,
        }
    }

    pub fn len(&self) -> usize {
        self.monos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monos.is_empty()
    }

    pub fn monomial(&self, i: usize) -> &[u8] {
        &self.monos[i]
    }

    pub fn index_of(&self, exps: &[u8]) -> Option<usize> {
        self.index.get(exps).copied()
    }

    /// Index range of the monomials of exactly degree `d`.
    pub fn degree_range(&self, d: usize) -> std::ops::Range<usize> {
        self.degree_start[d]..self.degree_start[d + 1]
    }
}

/// Shared, leaked jet spaces; there are only a handful of `(nvars, order)` pairs.
pub fn space(nvars: usize, order: usize) -> &'static JetSpace {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), &'static JetSpace>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("jet space cache poisoned");
    guard
        .entry((nvars, order))
        .or_insert_with(|| Box::leak(Box::new(JetSpace::build(nvars, order))))
}

#[derive(Clone, Debug)]
pub struct Jet<T: Coef> {
    space: &'static JetSpace,
    c: Vec<T>,
}

pub type RJet = Jet<f64>;
pub type CJet = Jet<Complex64>;

impl<T: Coef> Jet<T> {
    pub fn constant(nvars: usize, order: usize, value: T) -> Self {
        let space = space(nvars, order);
        let mut c = vec![T::zero(); space.len()];
        c[0] = value;
        Self { space, c }
    }

    pub fn zero(nvars: usize, order: usize) -> Self {
        Self::constant(nvars, order, T::zero())
    }

    pub fn from_coefficients(nvars: usize, order: usize, c: Vec<T>) -> Self {
        let space = space(nvars, order);
        assert_eq!(c.len(), space.len(), "coefficient count mismatch");
        Self { space, c }
    }

    pub fn nvars(&self) -> usize {
        self.space.nvars
    }

    pub fn order(&self) -> usize {
        self.space.order
    }

    pub fn space(&self) -> &'static JetSpace {
        self.space
    }

    pub fn coefficients(&self) -> &[T] {
        &self.c
    }

    pub fn value(&self) -> T {
        self.c[0]
    }

    /// Taylor coefficient for a multi-index (zero beyond the jet's order).
    pub fn coefficient(&self, exps: &[u8]) -> T {
        self.space.index_of(exps).map_or(T::zero(), |i| self.c[i])
    }

    /// Partial derivative `∂^α f(x₀)`.
    pub fn partial(&self, exps: &[u8]) -> T {
        let fact: f64 = exps.iter().map(|&e| factorial(e as usize)).product();
        self.coefficient(exps).scale(fact)
    }

    /// First partial derivative along variable `l`.
    pub fn d(&self, l: usize) -> T {
        let mut e = vec![0u8; self.nvars()];
        e[l] = 1;
        self.partial(&e)
    }

    /// Second partial derivative along `l`, `m`.
    pub fn d2(&self, l: usize, m: usize) -> T {
        let mut e = vec![0u8; self.nvars()];
        e[l] += 1;
        e[m] += 1;
        self.partial(&e)
    }

    pub fn gradient(&self) -> Vec<T> {
        (0..self.nvars()).map(|l| self.d(l)).collect()
    }

    /// Same function at a lower order.
    pub fn truncate(&self, order: usize) -> Self {
        assert!(order <= self.order(), "cannot raise jet order by truncation");
        let space = space(self.nvars(), order);
        Self {
            space,
            c: self.c[..space.len()].to_vec(),
        }
    }

    /// Exact partial derivative `∂_l f` as a jet of one order less.
    pub fn deriv(&self, l: usize) -> Self {
        assert!(self.order() >= 1, "cannot differentiate an order-0 jet");
        let lower = space(self.nvars(), self.order() - 1);
        let mut c = vec![T::zero(); lower.len()];
        let mut e = vec![0u8; self.nvars()];
        for (i, slot) in c.iter_mut().enumerate() {
            e.copy_from_slice(lower.monomial(i));
            e[l] += 1;
            let k = self.space.index[&e];
            *slot = self.c[k].scale(e[l] as f64);
        }
        Self { space: lower, c }
    }

    pub fn map_coef<U: Coef>(&self, f: impl Fn(T) -> U) -> Jet<U> {
        Jet {
            space: self.space,
            c: self.c.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map_coef(|v| v.scale(s))
    }

    pub fn mul_coef(&self, s: T) -> Self {
        self.map_coef(|v| v * s)
    }

    pub fn add_const(&self, s: T) -> Self {
        let mut out = self.clone();
        out.c[0] += s;
        out
    }

    fn aligned<'a>(a: &'a Self, b: &'a Self) -> (std::borrow::Cow<'a, Self>, std::borrow::Cow<'a, Self>) {
        use std::borrow::Cow;
        assert_eq!(a.nvars(), b.nvars(), "jet variable count mismatch");
        match a.order().cmp(&b.order()) {
            std::cmp::Ordering::Equal => (Cow::Borrowed(a), Cow::Borrowed(b)),
            std::cmp::Ordering::Less => (Cow::Borrowed(a), Cow::Owned(b.truncate(a.order()))),
            std::cmp::Ordering::Greater => (Cow::Owned(a.truncate(b.order())), Cow::Borrowed(b)),
        }
    }

    pub fn mul_jet(&self, other: &Self) -> Self {
        let (a, b) = Self::aligned(self, other);
        let mut c = vec![T::zero(); a.c.len()];
        for &(i, j, k) in &a.space.mul_table {
            c[k as usize] += a.c[i as usize] * b.c[j as usize];
        }
        Self { space: a.space, c }
    }

    /// `g(self)` given `derivs[k] = g^{(k)}(self.value())` for `k ≤ order`.
    pub fn compose(&self, derivs: &[T]) -> Self {
        let order = self.order();
        assert!(derivs.len() > order, "need derivatives up to the jet order");
        let mut delta = self.clone();
        delta.c[0] = T::zero();
        // Horner in δ with Taylor weights g^{(k)}/k!.
        let mut acc = Self::constant(self.nvars(), order, derivs[order].scale(1.0 / factorial(order)));
        for k in (0..order).rev() {
            acc = acc.mul_jet(&delta);
            acc.c[0] += derivs[k].scale(1.0 / factorial(k));
        }
        acc
    }
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

impl RJet {
    /// Coordinate jets `x_i + δx_i` for a base point.
    pub fn variables(x: &[f64], order: usize) -> Vec<RJet> {
        let n = x.len();
        let sp = space(n, order);
        (0..n)
            .map(|i| {
                let mut c = vec![0.0; sp.len()];
                c[0] = x[i];
                if order >= 1 {
                    let mut e = vec![0u8; n];
                    e[i] = 1;
                    c[sp.index[&e]] = 1.0;
                }
                RJet { space: sp, c }
            })
            .collect()
    }

    pub fn to_complex(&self) -> CJet {
        self.map_coef(|v| Complex64::new(v, 0.0))
    }

    pub fn exp(&self) -> Self {
        let e = self.value().exp();
        self.compose(&vec![e; self.order() + 1])
    }

    pub fn powf(&self, p: f64) -> Self {
        let u = self.value();
        let mut d = Vec::with_capacity(self.order() + 1);
        let mut coef = 1.0;
        for k in 0..=self.order() {
            d.push(coef * u.powf(p - k as f64));
            coef *= p - k as f64;
        }
        self.compose(&d)
    }

    pub fn powi(&self, p: i32) -> Self {
        if p >= 0 {
            let mut acc = Self::constant(self.nvars(), self.order(), 1.0);
            for _ in 0..p {
                acc = acc.mul_jet(self);
            }
            acc
        } else {
            self.powf(p as f64)
        }
    }

    pub fn sqrt(&self) -> Self {
        self.powf(0.5)
    }

    pub fn recip(&self) -> Self {
        self.powf(-1.0)
    }

    pub fn ln(&self) -> Self {
        let u = self.value();
        let mut d = vec![u.ln()];
        for k in 1..=self.order() {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            d.push(sign * factorial(k - 1) / u.powi(k as i32));
        }
        self.compose(&d)
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        let cyc = [s, c, -s, -c];
        self.compose(&(0..=self.order()).map(|k| cyc[k % 4]).collect::<Vec<_>>())
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        let cyc = [c, -s, -c, s];
        self.compose(&(0..=self.order()).map(|k| cyc[k % 4]).collect::<Vec<_>>())
    }

    /// `1 / |x|`-type helpers are built from this: `Σ x_i²`.
    pub fn sum_squares(xs: &[RJet]) -> RJet {
        let mut acc = xs[0].mul_jet(&xs[0]);
        for x in &xs[1..] {
            acc = &acc + &x.mul_jet(x);
        }
        acc
    }

    pub fn div_jet(&self, other: &Self) -> Self {
        self.mul_jet(&other.recip())
    }
}

impl CJet {
    pub fn exp(&self) -> Self {
        let e = self.value().exp();
        self.compose(&vec![e; self.order() + 1])
    }

    pub fn conj(&self) -> Self {
        self.map_coef(|v| v.conj())
    }

    pub fn re(&self) -> RJet {
        self.map_coef(|v| v.re)
    }

    pub fn im(&self) -> RJet {
        self.map_coef(|v| v.im)
    }

    pub fn mul_real(&self, other: &RJet) -> Self {
        self.mul_jet(&other.to_complex())
    }

    /// `|f|²` as a real jet.
    pub fn norm_sqr(&self) -> RJet {
        self.mul_jet(&self.conj()).re()
    }
}

macro_rules! impl_binop {
    ($tr:ident, $method:ident, $op:tt) => {
        impl<T: Coef> $tr<&Jet<T>> for &Jet<T> {
            type Output = Jet<T>;
            fn $method(self, rhs: &Jet<T>) -> Jet<T> {
                let (a, b) = Jet::aligned(self, rhs);
                Jet {
                    space: a.space,
                    c: a.c.iter().zip(b.c.iter()).map(|(&x, &y)| x $op y).collect(),
                }
            }
        }
        impl<T: Coef> $tr<Jet<T>> for Jet<T> {
            type Output = Jet<T>;
            fn $method(self, rhs: Jet<T>) -> Jet<T> {
                (&self).$method(&rhs)
            }
        }
        impl<T: Coef> $tr<&Jet<T>> for Jet<T> {
            type Output = Jet<T>;
            fn $method(self, rhs: &Jet<T>) -> Jet<T> {
                (&self).$method(rhs)
            }
        }
    };
}

impl_binop!(Add, add, +);
impl_binop!(Sub, sub, -);

impl<T: Coef> Mul<&Jet<T>> for &Jet<T> {
    type Output = Jet<T>;
    fn mul(self, rhs: &Jet<T>) -> Jet<T> {
        self.mul_jet(rhs)
    }
}

impl<T: Coef> Mul<Jet<T>> for Jet<T> {
    type Output = Jet<T>;
    fn mul(self, rhs: Jet<T>) -> Jet<T> {
        self.mul_jet(&rhs)
    }
}

impl<T: Coef> Mul<&Jet<T>> for Jet<T> {
    type Output = Jet<T>;
    fn mul(self, rhs: &Jet<T>) -> Jet<T> {
        self.mul_jet(rhs)
    }
}

impl<T: Coef> Neg for &Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Jet<T> {
        self.map_coef(|v| -v)
    }
}

impl<T: Coef> Neg for Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Jet<T> {
        -&self
    }
}

/// Sum of an iterator of jets sharing a layout.
pub fn sum_jets<T: Coef>(mut it: impl Iterator<Item = Jet<T>>, nvars: usize, order: usize) -> Jet<T> {
    match it.next() {
        None => Jet::zero(nvars, order),
        Some(first) => it.fold(first, |acc, j| &acc + &j),
    }
}
