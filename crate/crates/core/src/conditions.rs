//! Sampled estimation of the coefficient constants and certification of the
//! nontrapping hypotheses in the homogeneous and nonhomogeneous settings.

use crate::error::{Error, Result};
use crate::fields::{japanese, norm, CoefficientSet, DomainSpec, MatrixField, PotentialField, VectorField};
use crate::jet::space;
use crate::quadrature::halton;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Homogeneous,
    Nonhomogeneous,
}

/// Serialize non-finite floats as strings so JSON stays valid.
pub fn ser_f64<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

pub fn ser_opt_f64<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(x) => ser_f64(x, s),
        None => s.serialize_none(),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct CloudSpec {
    pub r_min: f64,
    pub r_max: f64,
    pub shells: usize,
    pub quasi_random: usize,
}

impl Default for CloudSpec {
    fn default() -> Self {
        Self {
            r_min: 1e-3,
            r_max: 1e3,
            shells: 60,
            quasi_random: 10_000,
        }
    }
}

impl CloudSpec {
    pub fn densified(&self, factor: usize) -> Self {
        Self {
            shells: self.shells * factor,
            quasi_random: self.quasi_random * factor,
            ..self.clone()
        }
    }
}

/// Sample points discretizing the sup over the domain.
#[derive(Clone, Debug)]
pub struct SampleCloud {
    pub n: usize,
    pub spec: CloudSpec,
    pub points: Vec<Vec<f64>>,
    pub radii: Vec<f64>,
    pub per_shell: usize,
}

/// Coordinate axes, normalized pair sums (n ≤ 8) and cube corners (n ≤ 4).
pub fn cloud_directions(n: usize) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut d = vec![0.0; n];
            d[i] = s;
            dirs.push(d);
        }
    }
    if n <= 8 {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..n {
            for j in i + 1..n {
                for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                    let mut d = vec![0.0; n];
                    d[i] = si * h;
                    d[j] = sj * h;
                    dirs.push(d);
                }
            }
        }
    }
    if n <= 4 {
        let c = 1.0 / (n as f64).sqrt();
        for mask in 0..(1usize << n) {
            dirs.push((0..n).map(|i| if mask >> i & 1 == 1 { -c } else { c }).collect());
        }
    }
    dirs
}

impl SampleCloud {
    pub fn new(n: usize, spec: &CloudSpec, domain: &DomainSpec) -> Self {
        let r_lo = match domain {
            DomainSpec::Ball { r0 } => spec.r_min.max(*r0),
            _ => spec.r_min,
        };
        let dirs = cloud_directions(n);
        let (l0, l1) = (r_lo.ln(), spec.r_max.ln());
        let radii: Vec<f64> = (0..spec.shells)
            .map(|k| (l0 + (l1 - l0) * k as f64 / (spec.shells - 1).max(1) as f64).exp())
            .collect();
        let mut points = Vec::new();
        for &r in &radii {
            for d in &dirs {
                let p: Vec<f64> = d.iter().map(|c| c * r).collect();
                if domain.contains(&p) {
                    points.push(p);
                }
            }
        }
        for h in halton(n + 1, spec.quasi_random) {
            let r = (l0 + (l1 - l0) * h[0]).exp();
            let mut d: Vec<f64> = h[1..].iter().map(|u| 2.0 * u - 1.0).collect();
            let dn = norm(&d);
            if dn < 1e-9 {
                continue;
            }
            d.iter_mut().for_each(|c| *c *= r / dn);
            if domain.contains(&d) {
                points.push(d);
            }
        }
        Self {
            n,
            spec: spec.clone(),
            points,
            radii,
            per_shell: dirs.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Sup of a pointwise quantity over the cloud, with divergence detection.
#[derive(Clone, Debug, Serialize)]
pub struct SupEstimate {
    #[serde(serialize_with = "ser_f64")]
    pub value: f64,
    pub finite_max: f64,
    pub argmax: Vec<f64>,
    pub divergent: bool,
}

fn sup_over(cloud: &SampleCloud, q: impl Fn(&[f64]) -> f64 + Sync) -> SupEstimate {
    let vals: Vec<f64> = cloud.points.par_iter().map(|p| q(p)).collect();
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0;
    for (i, &v) in vals.iter().enumerate() {
        if v > best {
            best = v;
            arg = i;
        }
    }
    let window_max = |lo: f64, hi: f64| -> f64 {
        cloud
            .points
            .iter()
            .zip(&vals)
            .filter(|(p, _)| {
                let r = norm(p);
                r >= lo && r <= hi
            })
            .map(|(_, v)| *v)
            .fold(0.0, f64::max)
    };
    let middle = window_max(10f64.powf(-0.5), 10f64.powf(0.5));
    let outer = window_max(cloud.spec.r_max / 10.0, cloud.spec.r_max);
    let divergent = outer > 0.0 && outer > 10.0 * middle;
    let best = if cloud.points.is_empty() { 0.0 } else { best.max(0.0) };
    SupEstimate {
        value: if divergent { f64::INFINITY } else { best },
        finite_max: best,
        argmax: cloud.points.get(arg).cloned().unwrap_or_default(),
        divergent,
    }
}

fn sym_op_norm(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.amax()
}

/// `(N, ν)` as sampled max/min eigenvalues.
pub fn estimate_spectral_bounds(a: &MatrixField, cloud: &SampleCloud) -> Result<(f64, f64)> {
    if cloud.is_empty() {
        return Err(Error::InvalidInput("empty sample cloud".into()));
    }
    let eval = |p: &[f64]| -> Result<(f64, f64)> {
        let m = a.value(p);
        let asym = (&m - m.transpose()).abs().max();
        if asym > 1e-12 * m.abs().max().max(1.0) {
            return Err(Error::NonSymmetric {
                point: p.to_vec(),
                asymmetry: asym,
            });
        }
        let e = m.symmetric_eigen().eigenvalues;
        Ok((e.max(), e.min()))
    };
    if a.is_constant() {
        return eval(&cloud.points[0]);
    }
    let vals: Result<Vec<(f64, f64)>> = cloud.points.par_iter().map(|p| eval(p)).collect();
    let vals = vals?;
    let big = vals.iter().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max);
    let small = vals.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    Ok((big, small))
}

/// `(|a'|, |a''|, |a'''|)` with `|a^{(k)}| = Σ_{|α|=k} |∂^α a|` in operator norm.
pub fn derivative_norms(a: &MatrixField, x: &[f64]) -> [f64; 3] {
    if a.is_constant() {
        return [0.0; 3];
    }
    let n = a.dim();
    let jets = a.jets(x, 3);
    let sp = space(n, 3);
    let mut out = [0.0; 3];
    for (k, slot) in out.iter_mut().enumerate() {
        for idx in sp.degree_range(k + 1) {
            let alpha = sp.monomial(idx).to_vec();
            let m = DMatrix::from_fn(n, n, |i, j| jets[i * n + j].partial(&alpha));
            *slot += sym_op_norm(&m);
        }
    }
    out
}

pub fn estimate_ca(a: &MatrixField, delta: f64, cloud: &SampleCloud) -> SupEstimate {
    if a.is_constant() {
        return zero_sup();
    }
    sup_over(cloud, |p| {
        let r = norm(p);
        let d = derivative_norms(a, p);
        (d[0] + r * d[1] + r * r * d[2]) * japanese(r).powf(1.0 + delta)
    })
}

fn zero_sup() -> SupEstimate {
    SupEstimate {
        value: 0.0,
        finite_max: 0.0,
        argmax: Vec::new(),
        divergent: false,
    }
}

/// Operator norm of the antisymmetric matrix `db`.
pub fn db_norm(b: &VectorField, x: &[f64]) -> f64 {
    b.db(x).singular_values().max()
}

pub fn estimate_cb(b: &VectorField, delta: f64, cloud: &SampleCloud, mode: Mode) -> SupEstimate {
    if b.0.is_constant() {
        return zero_sup();
    }
    sup_over(cloud, |p| {
        let r = norm(p);
        let w = match mode {
            Mode::Homogeneous => r.powf(2.0 + delta) + r.powf(2.0 - delta),
            Mode::Nonhomogeneous => r.powf(2.0 + delta) + r,
        };
        db_norm(b, p) * w
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PotentialConstants {
    pub c_minus: SupEstimate,
    pub c_plus: SupEstimate,
    pub c_c: SupEstimate,
}

fn a_x_dot(a: &MatrixField, x: &[f64], g: &[f64]) -> f64 {
    let m = a.value(x);
    let n = x.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += m[(i, j)] * x[j] * g[i];
        }
    }
    s
}

/// `(C₋, C₊, C_c)`; the squared sups are square-rooted for `C₋` and `C₊`.
pub fn estimate_cpm_cc(
    c: &PotentialField,
    a: &MatrixField,
    delta: f64,
    cloud: &SampleCloud,
    mode: Mode,
) -> PotentialConstants {
    if c.is_zero() {
        return PotentialConstants {
            c_minus: zero_sup(),
            c_plus: zero_sup(),
            c_c: zero_sup(),
        };
    }
    let sqrt_sup = |mut s: SupEstimate| {
        s.value = s.value.sqrt();
        s.finite_max = s.finite_max.sqrt();
        s
    };
    let c_minus = sqrt_sup(sup_over(cloud, |p| {
        let r = norm(p);
        let w = match mode {
            Mode::Homogeneous => r.powf(2.0 + delta) + r.powf(2.0 - delta),
            Mode::Nonhomogeneous => japanese(r).powf(2.0 + delta),
        };
        (-c.value(p)).max(0.0) * w
    }));
    let c_plus = sqrt_sup(sup_over(cloud, |p| {
        let r = norm(p);
        c.value(p).max(0.0) * r * r
    }));
    let c_c = sup_over(cloud, |p| {
        let r = norm(p);
        let g = c.gradient(p);
        let w = match mode {
            Mode::Homogeneous => r * japanese(r).powf(1.0 + delta),
            Mode::Nonhomogeneous => japanese(r).powf(2.0 + delta),
        };
        a_x_dot(a, p, &g).max(0.0) * w
    });
    PotentialConstants { c_minus, c_plus, c_c }
}

/// `C_I = sup |a − I|⟨x⟩^δ`.
pub fn estimate_ci(a: &MatrixField, delta: f64, cloud: &SampleCloud) -> SupEstimate {
    let n = a.dim();
    sup_over(cloud, |p| {
        let m = a.value(p) - DMatrix::identity(n, n);
        sym_op_norm(&m) * japanese(norm(p)).powf(delta)
    })
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct RatioCheck {
    pub pass: bool,
    pub ratio: f64,
    pub threshold: f64,
    pub branch: String,
    pub boundary: bool,
}

pub const EQUALITY_SLACK: f64 = 1e-12;

pub fn ratio_threshold(n: usize) -> (f64, bool) {
    let nf = n as f64;
    if n <= 46 {
        (((nf * nf + 2.0 * nf + 15.0) / (6.0 * (nf + 2.0))).sqrt(), false)
    } else {
        ((3.0 * nf - 1.0) / (nf + 3.0), true)
    }
}

pub fn check_ratio(big_n: f64, nu: f64, n: usize) -> RatioCheck {
    let ratio = big_n / nu;
    let (threshold, strict) = ratio_threshold(n);
    let (pass, boundary) = if strict {
        (ratio < threshold, false)
    } else {
        (
            ratio <= threshold + EQUALITY_SLACK,
            (ratio - threshold).abs() <= EQUALITY_SLACK,
        )
    };
    RatioCheck {
        pass,
        ratio,
        threshold,
        branch: if strict { "n>=47 strict".into() } else { "n<=46".into() },
        boundary,
    }
}

/// `2|a|²_HS + ā² − 6āâ + 15â² − 12|ax̂|²` at `x ≠ 0`.
pub fn case_a_value(a: &DMatrix<f64>, x: &[f64]) -> Result<f64> {
    let r = norm(x);
    if r == 0.0 {
        return Err(Error::OriginSample);
    }
    let n = x.len();
    let xh: Vec<f64> = x.iter().map(|c| c / r).collect();
    let hs2: f64 = a.iter().map(|v| v * v).sum();
    let tr = a.trace();
    let ax: Vec<f64> = (0..n).map(|i| (0..n).map(|j| a[(i, j)] * xh[j]).sum()).collect();
    let ahat: f64 = ax.iter().zip(&xh).map(|(u, v)| u * v).sum();
    let ax2: f64 = ax.iter().map(|v| v * v).sum();
    Ok(2.0 * hs2 + tr * tr - 6.0 * tr * ahat + 15.0 * ahat * ahat - 12.0 * ax2)
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseAReport {
    pub pass: bool,
    pub min_value: f64,
    pub argmin: Vec<f64>,
}

/// Absolute slack absorbing roundoff when the expression vanishes identically.
pub const CASE_A_SLACK: f64 = 1e-10;

pub fn pointwise_case_a(a: &MatrixField, cloud: &SampleCloud) -> Result<CaseAReport> {
    let constant = if a.is_constant() && !cloud.is_empty() {
        Some(a.value(&cloud.points[0]))
    } else {
        None
    };
    let vals: Result<Vec<f64>> = cloud
        .points
        .par_iter()
        .map(|p| match &constant {
            Some(m) => case_a_value(m, p),
            None => case_a_value(&a.value(p), p),
        })
        .collect();
    let vals = vals?;
    let mut min = f64::INFINITY;
    let mut arg = 0;
    for (i, &v) in vals.iter().enumerate() {
        if v < min {
            min = v;
            arg = i;
        }
    }
    Ok(CaseAReport {
        pass: min >= -CASE_A_SLACK,
        min_value: min,
        argmin: cloud.points.get(arg).cloned().unwrap_or_default(),
    })
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct KConstants {
    pub k0: f64,
    pub k: f64,
    pub m0: f64,
    /// `(n+3)ν²/18·((3n−1)/(n+3) − N/ν)`, the alternative form of `ν²K₀/9`.
    pub k_third_alt: f64,
}

pub fn compute_k_m0(big_n: f64, nu: f64, n: usize, c_plus: f64) -> Result<KConstants> {
    let nf = n as f64;
    let k0 = (3.0 * nf - 1.0) / 2.0 - (nf + 3.0) * big_n / (2.0 * nu);
    if k0 <= 0.0 {
        return Err(Error::Trapped { k0, ratio: big_n / nu });
    }
    let k = 1f64.min(nu * nu / 9.0).min(nu * nu * k0 / 9.0);
    let m0 = 64.0 * nf * nf / (k * k) * (nu + 1.0).powi(2) * (c_plus + nu + 1.0).powi(2);
    let k_third_alt = (nf + 3.0) * nu * nu / 18.0 * ((3.0 * nf - 1.0) / (nf + 3.0) - big_n / nu);
    Ok(KConstants { k0, k, m0, k_third_alt })
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct CheckRecord {
    pub name: String,
    #[serde(serialize_with = "ser_f64")]
    pub lhs: f64,
    #[serde(serialize_with = "ser_f64")]
    pub rhs: f64,
    pub pass: bool,
    pub strict: bool,
}

impl CheckRecord {
    pub fn le(name: &str, lhs: f64, rhs: f64) -> Self {
        Self {
            name: name.into(),
            lhs,
            rhs,
            pass: lhs <= rhs + EQUALITY_SLACK * rhs.abs().max(1.0),
            strict: false,
        }
    }

    pub fn lt(name: &str, lhs: f64, rhs: f64) -> Self {
        Self {
            name: name.into(),
            lhs,
            rhs,
            pass: lhs < rhs,
            strict: true,
        }
    }
}

/// Constants feeding the smallness checks.
#[derive(Clone, Copy, Debug, Serialize, Default)]
pub struct Constants {
    pub n: usize,
    pub delta: f64,
    pub big_n: f64,
    pub nu: f64,
    #[serde(serialize_with = "ser_f64")]
    pub c_a: f64,
    #[serde(serialize_with = "ser_f64")]
    pub c_b: f64,
    #[serde(serialize_with = "ser_f64")]
    pub c_minus: f64,
    #[serde(serialize_with = "ser_f64")]
    pub c_plus: f64,
    #[serde(serialize_with = "ser_f64")]
    pub c_c: f64,
    #[serde(serialize_with = "ser_f64")]
    pub c_i: f64,
}

pub fn check_smallness(c: &Constants, k: Option<f64>, mode: Mode) -> Vec<CheckRecord> {
    let d = c.delta;
    match mode {
        Mode::Homogeneous => {
            let k = k.unwrap_or(0.0);
            let n = c.n as f64;
            vec![
                CheckRecord::le(
                    "C_a(N+C_a) <= K delta/(24n)",
                    c.c_a * (c.big_n + c.c_a),
                    k * d / (24.0 * n),
                ),
                CheckRecord::le("C_b <= K delta/(5N^2)", c.c_b, k * d / (5.0 * c.big_n * c.big_n)),
                CheckRecord::le(
                    "C_- <= K delta/(18N(N+2))",
                    c.c_minus,
                    k * d / (18.0 * c.big_n * (c.big_n + 2.0)),
                ),
                CheckRecord::le("C_c <= K delta", c.c_c, k * d),
            ]
        }
        Mode::Nonhomogeneous => vec![
            CheckRecord::le("C_a <= delta/48000", c.c_a, d / 48000.0),
            CheckRecord::le("C_I <= delta/7200", c.c_i, d / 7200.0),
            CheckRecord::le("C_b <= delta/920", c.c_b, d / 920.0),
            CheckRecord::le("C_- <= delta/5500", c.c_minus, d / 5500.0),
            CheckRecord::le("C_c <= delta/1300", c.c_c, d / 1300.0),
            CheckRecord::lt("C_I < 1/100", c.c_i, 0.01),
        ],
    }
}

pub fn check_positivity(c_minus: f64, nu: f64, n: usize) -> CheckRecord {
    CheckRecord::lt("C_- < (n-2)sqrt(nu)/2", c_minus, (n as f64 - 2.0) * nu.sqrt() / 2.0)
}

/// Full certification of a coefficient set.
#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    pub preset: String,
    pub mode: Mode,
    pub constants: Constants,
    pub k: Option<KConstants>,
    pub ratio: RatioCheck,
    pub case_a: CaseAReport,
    pub smallness: Vec<CheckRecord>,
    pub positivity: CheckRecord,
    pub starshaped: Option<crate::fields::StarshapedReport>,
    pub sups: std::collections::BTreeMap<String, SupEstimate>,
    pub trapped: Option<String>,
    pub cloud_points: usize,
    #[serde(serialize_with = "ser_opt_f64")]
    pub refinement_change: Option<f64>,
    pub matrix_norm: String,
    pub pass: bool,
}

fn estimate_constants(
    coeffs: &CoefficientSet,
    cloud: &SampleCloud,
    mode: Mode,
) -> Result<(Constants, Vec<(String, SupEstimate)>)> {
    let (big_n, nu) = estimate_spectral_bounds(&coeffs.a, cloud)?;
    let ca = estimate_ca(&coeffs.a, coeffs.delta, cloud);
    let cb = estimate_cb(&coeffs.b, coeffs.delta, cloud, mode);
    let pc = estimate_cpm_cc(&coeffs.c, &coeffs.a, coeffs.delta, cloud, mode);
    let ci = estimate_ci(&coeffs.a, coeffs.delta, cloud);
    let constants = Constants {
        n: coeffs.n,
        delta: coeffs.delta,
        big_n,
        nu,
        c_a: ca.value,
        c_b: cb.value,
        c_minus: pc.c_minus.value,
        c_plus: pc.c_plus.value,
        c_c: pc.c_c.value,
        c_i: ci.value,
    };
    let sups = vec![
        ("C_a".to_string(), ca),
        ("C_b".to_string(), cb),
        ("C_minus".to_string(), pc.c_minus),
        ("C_plus".to_string(), pc.c_plus),
        ("C_c".to_string(), pc.c_c),
        ("C_I".to_string(), ci),
    ];
    Ok((constants, sups))
}

fn rel_change(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else if !a.is_finite() || !b.is_finite() {
        f64::INFINITY
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

pub fn certify(
    coeffs: &CoefficientSet,
    domain: &DomainSpec,
    mode: Mode,
    spec: &CloudSpec,
    refinement_check: bool,
) -> Result<ConditionReport> {
    let cloud = SampleCloud::new(coeffs.n, spec, domain);
    let (constants, sups) = estimate_constants(coeffs, &cloud, mode)?;
    let refinement_change = if refinement_check {
        let fine = SampleCloud::new(coeffs.n, &spec.densified(2), domain);
        let (c2, _) = estimate_constants(coeffs, &fine, mode)?;
        let pairs = [
            (constants.big_n, c2.big_n),
            (constants.nu, c2.nu),
            (constants.c_a, c2.c_a),
            (constants.c_b, c2.c_b),
            (constants.c_minus, c2.c_minus),
            (constants.c_plus, c2.c_plus),
            (constants.c_c, c2.c_c),
        ];
        Some(pairs.iter().map(|(a, b)| rel_change(*a, *b)).fold(0.0, f64::max))
    } else {
        None
    };
    let ratio = check_ratio(constants.big_n, constants.nu, coeffs.n);
    let case_a = pointwise_case_a(&coeffs.a, &cloud)?;
    let (k, trapped) = match compute_k_m0(constants.big_n, constants.nu, coeffs.n, constants.c_plus) {
        Ok(k) => (Some(k), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let smallness = check_smallness(&constants, k.as_ref().map(|k| k.k), mode);
    let positivity = check_positivity(constants.c_minus, constants.nu, coeffs.n);
    let starshaped = if domain.is_empty() {
        None
    } else {
        Some(crate::fields::starshaped_check(domain, &coeffs.a, 400)?)
    };
    let star_ok = starshaped.as_ref().is_none_or(|s| s.pass);
    let pass = match mode {
        Mode::Homogeneous => {
            ratio.pass && trapped.is_none() && smallness.iter().all(|c| c.pass) && positivity.pass && star_ok
        }
        Mode::Nonhomogeneous => coeffs.n == 3 && smallness.iter().all(|c| c.pass) && constants.nu > 0.0 && star_ok,
    };
    Ok(ConditionReport {
        preset: coeffs.name.clone(),
        mode,
        constants,
        k,
        ratio,
        case_a,
        smallness,
        positivity,
        starshaped,
        sups: sups.into_iter().collect(),
        trapped,
        cloud_points: cloud.len(),
        refinement_change,
        matrix_norm: "operator".into(),
        pass,
    })
}

impl ConditionReport {
    /// Human-readable table.
    pub fn table(&self) -> String {
        let c = &self.constants;
        let mut s = String::new();
        s.push_str(&format!(
            "preset {} (n = {}, delta = {}, mode {:?})\n",
            self.preset, c.n, c.delta, self.mode
        ));
        for (name, v) in [
            ("N", c.big_n),
            ("nu", c.nu),
            ("C_a", c.c_a),
            ("C_b", c.c_b),
            ("C_minus", c.c_minus),
            ("C_plus", c.c_plus),
            ("C_c", c.c_c),
            ("C_I", c.c_i),
        ] {
            s.push_str(&format!("  {name:<8} {v:.6e}\n"));
        }
        if let Some(k) = &self.k {
            s.push_str(&format!("  K0 {:.6}  K {:.6}  M0 {:.6e}\n", k.k0, k.k, k.m0));
        }
        if let Some(t) = &self.trapped {
            s.push_str(&format!("  {t}\n"));
        }
        s.push_str(&format!(
            "  ratio N/nu {:.6} vs {:.6} [{}] {}\n",
            self.ratio.ratio,
            self.ratio.threshold,
            self.ratio.branch,
            if self.ratio.pass { "pass" } else { "FAIL" }
        ));
        for r in self.smallness.iter().chain(std::iter::once(&self.positivity)) {
            s.push_str(&format!(
                "  {:<32} {:.4e} vs {:.4e} {}\n",
                r.name,
                r.lhs,
                r.rhs,
                if r.pass { "pass" } else { "FAIL" }
            ));
        }
        s.push_str(&format!("  overall: {}\n", if self.pass { "pass" } else { "FAIL" }));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_thresholds() {
        assert_eq!(ratio_threshold(3).0, 1.0);
        assert!((ratio_threshold(4).0 - (13f64 / 12.0).sqrt()).abs() < 1e-15);
        assert_eq!(ratio_threshold(47), (2.8, true));
        assert!(check_ratio(1.0, 1.0, 3).pass);
        assert!(!check_ratio(1.0 + 1e-9, 1.0, 3).pass);
        assert!(!check_ratio(2.8, 1.0, 47).pass);
    }

    #[test]
    fn k_and_m0_examples() {
        let k = compute_k_m0(1.0, 1.0, 3, 0.0).unwrap();
        assert_eq!(k.k0, 1.0);
        assert!((k.k - 1.0 / 9.0).abs() < 1e-16);
        assert!((k.m0 - 746496.0).abs() < 1e-6);
        let k = compute_k_m0(3.0, 3.0, 3, 0.0).unwrap();
        assert_eq!(k.k, 1.0);
        assert!((k.m0 - 147456.0).abs() < 1e-9);
        assert!(matches!(compute_k_m0(1.5, 1.0, 3, 0.0), Err(Error::Trapped { .. })));
    }

    #[test]
    fn positivity_thresholds() {
        assert!(check_positivity(0.0, 0.3, 3).pass);
        assert_eq!(check_positivity(0.1, 1.0, 3).rhs, 0.5);
        assert_eq!(check_positivity(0.1, 0.25, 4).rhs, 0.5);
    }

    #[test]
    fn directions_in_3d() {
        assert_eq!(cloud_directions(3).len(), 26);
    }
}
