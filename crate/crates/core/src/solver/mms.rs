use super::grid::GridProblem;
use super::radial::{solve_radial, RadialSolveSpec};
use super::{ComplexRadialFn, PointSource, SolveOptions};
use crate::error::Result;
use crate::fields::{apply_ab, CoefficientSet, DomainSpec, TestFunction};
use num_complex::Complex64;
use serde::Serialize;
use std::sync::Arc;

/// `f = A^b v − cv + (λ+iε)v` evaluated from the jets of `v`.
pub fn manufactured_rhs(v: &TestFunction, coeffs: &CoefficientSet, lambda: f64, eps: f64) -> PointSource {
    let v = v.clone();
    let coeffs = coeffs.clone();
    let z = Complex64::new(lambda, eps);
    Arc::new(move |x: &[f64]| {
        let val = v.value(x);
        apply_ab(&v, &coeffs, x) + (z - coeffs.c.value(x)) * val
    })
}

pub enum StudyPath {
    /// Whole-space (`r0 = 0`) or exterior radial grid; `m0` unknowns on the coarsest level.
    Radial { r0: f64, r_max: f64, m0: usize },
    Grid {
        half_width: f64,
        h0: f64,
        domain: DomainSpec,
        options: SolveOptions,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceStudy {
    pub h: Vec<f64>,
    /// Maximum nodal error per level.
    pub errors: Vec<f64>,
    /// Least-squares slope of `log error` against `log h`; `None` when the errors vanish.
    pub order: Option<f64>,
}

pub fn fit_order(h: &[f64], errors: &[f64]) -> Option<f64> {
    if h.len() < 2 || errors.iter().any(|&e| !(e > 0.0)) {
        return None;
    }
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|v| v.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Solves the manufactured problem on `levels` grids, halving `h` each time.
pub fn convergence_study(
    v_exact: &TestFunction,
    coeffs: &CoefficientSet,
    lambda: f64,
    eps: f64,
    path: &StudyPath,
    levels: usize,
) -> Result<ConvergenceStudy> {
    let f = manufactured_rhs(v_exact, coeffs, lambda, eps);
    let n = coeffs.n;
    let mut hs = Vec::new();
    let mut errors = Vec::new();
    for level in 0..levels {
        match path {
            StudyPath::Radial { r0, r_max, m0 } => {
                let m = if *r0 == 0.0 {
                    m0 << level
                } else {
                    ((m0 + 1) << level) - 1
                };
                let axis = move |r: f64| {
                    let mut x = vec![0.0; n];
                    x[0] = r;
                    x
                };
                let fr = f.clone();
                let frad: ComplexRadialFn = Arc::new(move |r| fr(&axis(r)));
                let spec = RadialSolveSpec::from_coefficients(coeffs, *r0, *r_max, m, lambda, eps, frad)?;
                let out = solve_radial(&spec)?;
                let err = out
                    .v
                    .r
                    .iter()
                    .zip(&out.v.v)
                    .map(|(&r, v)| (v - v_exact.value(&axis(r))).norm())
                    .fold(0.0, f64::max);
                hs.push(spec.step());
                errors.push(err);
            }
            StudyPath::Grid {
                half_width,
                h0,
                domain,
                options,
            } => {
                let h = h0 / (1 << level) as f64;
                let problem = GridProblem::new(*half_width, h, coeffs, domain)?;
                let rhs = problem.sample(&f);
                let out = problem.solve(lambda, eps, &rhs, options)?;
                let grid = problem.grid();
                let err = (0..grid.len())
                    .filter(|&i| !out.v.mask[i])
                    .map(|i| (out.v.v[i] - v_exact.value(&grid.point(i))).norm())
                    .fold(0.0, f64::max);
                hs.push(h);
                errors.push(err);
            }
        }
    }
    let order = fit_order(&hs, &errors);
    Ok(ConvergenceStudy { h: hs, errors, order })
}
