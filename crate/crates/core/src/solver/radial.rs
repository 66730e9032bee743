use super::{ComplexRadialFn, SolveResult};
use crate::error::{Error, Result};
use crate::fields::{CoefficientSet, RadialFn};
use num_complex::Complex64;
use serde::Serialize;

pub struct RadialSolveSpec {
    pub n: usize,
    /// Inner radius; 0 means the whole space.
    pub r0: f64,
    pub r_max: f64,
    /// Number of unknowns.
    pub m: usize,
    pub alpha: RadialFn,
    pub c: RadialFn,
    pub lambda: f64,
    pub eps: f64,
    pub f: ComplexRadialFn,
}

impl RadialSolveSpec {
    /// Uses the radial description attached to a coefficient set.
    #[allow(clippy::too_many_arguments)]
    pub fn from_coefficients(
        coeffs: &CoefficientSet,
        r0: f64,
        r_max: f64,
        m: usize,
        lambda: f64,
        eps: f64,
        f: ComplexRadialFn,
    ) -> Result<Self> {
        let radial = coeffs
            .radial
            .as_ref()
            .ok_or_else(|| Error::InvalidInput(format!("preset '{}' has no radial description", coeffs.name)))?;
        Ok(Self {
            n: coeffs.n,
            r0,
            r_max,
            m,
            alpha: radial.alpha.clone(),
            c: radial.c.clone(),
            lambda,
            eps,
            f,
        })
    }

    pub fn step(&self) -> f64 {
        if self.r0 == 0.0 {
            self.r_max / self.m as f64
        } else {
            (self.r_max - self.r0) / (self.m + 1) as f64
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        radial_nodes(self.r0, self.r_max, self.m)
    }

    /// `ε·R_max / (2√(|λ|+1))`; values below 5 mean the outer boundary is felt.
    pub fn truncation_indicator(&self) -> f64 {
        self.eps * self.r_max / (2.0 * (self.lambda.abs() + 1.0).sqrt())
    }
}

/// Unknown locations: cell centres `(i+½)h` in the whole space, interior nodes otherwise.
pub fn radial_nodes(r0: f64, r_max: f64, m: usize) -> Vec<f64> {
    if r0 == 0.0 {
        let h = r_max / m as f64;
        (0..m).map(|i| (i as f64 + 0.5) * h).collect()
    } else {
        let h = (r_max - r0) / (m + 1) as f64;
        (0..m).map(|i| r0 + (i + 1) as f64 * h).collect()
    }
}

/// `∫ s^{n−1} ds` over the cell of each node; the first whole-space cell starts at 0.
pub fn cell_volumes(n: usize, r0: f64, r: &[f64], h: f64) -> Vec<f64> {
    let p = n as i32;
    r.iter()
        .enumerate()
        .map(|(i, &ri)| {
            let lo = if r0 == 0.0 && i == 0 { 0.0 } else { ri - 0.5 * h };
            ((ri + 0.5 * h).powi(p) - lo.powi(p)) / n as f64
        })
        .collect()
}

/// Radial discrete solution with the quadrature weights `r^{n−1}h` of the scheme.
#[derive(Clone, Debug, Serialize)]
pub struct RadialProfile {
    pub n: usize,
    pub r0: f64,
    pub r_max: f64,
    pub r: Vec<f64>,
    pub v: Vec<Complex64>,
}

impl RadialProfile {
    pub fn step(&self) -> f64 {
        if self.r.len() > 1 {
            self.r[1] - self.r[0]
        } else {
            self.r_max - self.r0
        }
    }

    /// Shell volumes over the sphere area, the quadrature weights of the scheme.
    pub fn weights(&self) -> Vec<f64> {
        cell_volumes(self.n, self.r0, &self.r, self.step())
    }

    /// Values including the boundary: zero at `r0 > 0` and at `r_max`.
    fn padded(&self) -> (Vec<f64>, Vec<Complex64>) {
        let zero = Complex64::new(0.0, 0.0);
        let mut r = Vec::with_capacity(self.r.len() + 2);
        let mut v = Vec::with_capacity(self.r.len() + 2);
        if self.r0 > 0.0 {
            r.push(self.r0);
            v.push(zero);
        }
        r.extend_from_slice(&self.r);
        v.extend_from_slice(&self.v);
        r.push(self.r_max);
        v.push(zero);
        (r, v)
    }

    /// Radial derivative at the unknowns by centred differences.
    pub fn derivative(&self) -> Vec<Complex64> {
        let h = self.step();
        let m = self.v.len();
        let zero = Complex64::new(0.0, 0.0);
        (0..m)
            .map(|i| {
                let left = if i > 0 {
                    self.v[i - 1]
                } else if self.r0 == 0.0 {
                    self.v[0]
                } else {
                    zero
                };
                let right = if i + 1 < m {
                    self.v[i + 1]
                } else if self.r0 == 0.0 {
                    -self.v[m - 1]
                } else {
                    zero
                };
                (right - left) / (2.0 * h)
            })
            .collect()
    }

    /// Piecewise-linear value at radius `r`.
    pub fn value_at(&self, r: f64) -> Complex64 {
        let (rs, vs) = self.padded();
        if r <= rs[0] {
            return if self.r0 > 0.0 && r < self.r0 {
                Complex64::new(0.0, 0.0)
            } else {
                vs[0]
            };
        }
        if r >= rs[rs.len() - 1] {
            return Complex64::new(0.0, 0.0);
        }
        let i = rs.partition_point(|&t| t <= r);
        let t = (r - rs[i - 1]) / (rs[i] - rs[i - 1]);
        vs[i - 1] * (1.0 - t) + vs[i] * t
    }

    /// Tabulated densities `(|v|², |v'|², |v||v'|)` with their radii, for norm evaluation.
    pub fn densities(&self) -> (Vec<f64>, Vec<Vec<f64>>) {
        let dv = self.derivative();
        let (mut r, mut ch) = (Vec::new(), vec![Vec::new(), Vec::new(), Vec::new()]);
        if self.r0 > 0.0 {
            let slope = self.v[0] / self.step();
            r.push(self.r0);
            ch[0].push(0.0);
            ch[1].push(slope.norm_sqr());
            ch[2].push(0.0);
        }
        for i in 0..self.v.len() {
            let a = self.v[i].norm_sqr();
            let b = dv[i].norm_sqr();
            r.push(self.r[i]);
            ch[0].push(a);
            ch[1].push(b);
            ch[2].push((a * b).sqrt());
        }
        let slope = -self.v[self.v.len() - 1] / (self.r_max - self.r[self.r.len() - 1]);
        r.push(self.r_max);
        ch[0].push(0.0);
        ch[1].push(slope.norm_sqr());
        ch[2].push(0.0);
        (r, ch)
    }
}

/// Assembled tridiagonal operator `T = (1/w)(flux differences) − c + z`.
pub struct RadialSystem {
    pub lower: Vec<Complex64>,
    pub diag: Vec<Complex64>,
    pub upper: Vec<Complex64>,
    /// Cell volume over the sphere area at each unknown.
    pub weights: Vec<f64>,
}

impl RadialSystem {
    pub fn assemble(spec: &RadialSolveSpec) -> Result<Self> {
        if !(spec.eps > 0.0) {
            return Err(Error::InvalidInput(format!("eps = {} must be positive", spec.eps)));
        }
        if spec.n < 1 || spec.m < 2 || !(spec.r_max > spec.r0) || spec.r0 < 0.0 {
            return Err(Error::InvalidInput("radial grid is degenerate".into()));
        }
        let h = spec.step();
        let r = spec.nodes();
        let p = spec.n as i32 - 1;
        let s = |rf: f64| -> Result<f64> {
            let a = (spec.alpha)(rf);
            if !(a > 0.0) {
                return Err(Error::SingularAssembly(format!("alpha({rf}) = {a} is not positive")));
            }
            Ok(rf.powi(p) * a)
        };
        let z = Complex64::new(spec.lambda, spec.eps);
        let m = spec.m;
        let mut lower = vec![Complex64::new(0.0, 0.0); m];
        let mut diag = vec![Complex64::new(0.0, 0.0); m];
        let mut upper = vec![Complex64::new(0.0, 0.0); m];
        let weights = cell_volumes(spec.n, spec.r0, &r, h);
        for i in 0..m {
            let w = weights[i];
            let left_face = r[i] - 0.5 * h;
            let right_face = r[i] + 0.5 * h;
            let sl = if spec.r0 == 0.0 && i == 0 { 0.0 } else { s(left_face)? };
            let sr = s(right_face)?;
            let cl = sl / (h * w);
            let cr = sr / (h * w);
            let mut d = -(cl + cr);
            if spec.r0 == 0.0 && i == m - 1 {
                // Dirichlet on the face r_max through the odd reflection
                d -= cr;
            }
            if i > 0 {
                lower[i] = cl.into();
            }
            if i + 1 < m {
                upper[i] = cr.into();
            }
            let c = (spec.c)(r[i]);
            if !c.is_finite() {
                return Err(Error::SingularAssembly(format!("c({}) is not finite", r[i])));
            }
            diag[i] = z + (d - c);
        }
        Ok(Self {
            lower,
            diag,
            upper,
            weights,
        })
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let m = v.len();
        (0..m)
            .map(|i| {
                let mut s = self.diag[i] * v[i];
                if i > 0 {
                    s += self.lower[i] * v[i - 1];
                }
                if i + 1 < m {
                    s += self.upper[i] * v[i + 1];
                }
                s
            })
            .collect()
    }

    /// Tridiagonal solve with partial pivoting.
    pub fn solve(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        let m = rhs.len();
        let zero = Complex64::new(0.0, 0.0);
        // rows carry (sub, main, sup, sup2) after elimination
        let mut dl: Vec<Complex64> = self.lower.clone();
        let mut d: Vec<Complex64> = self.diag.clone();
        let mut du: Vec<Complex64> = self.upper.clone();
        let mut du2 = vec![zero; m];
        let mut b = rhs.to_vec();
        for i in 0..m - 1 {
            let sub = dl[i + 1];
            if d[i].norm() >= sub.norm() {
                if d[i] == zero {
                    return Err(Error::SingularAssembly(format!("zero pivot at row {i}")));
                }
                let f = sub / d[i];
                d[i + 1] -= f * du[i];
                b[i + 1] = b[i + 1] - f * b[i];
                dl[i + 1] = zero;
            } else {
                let f = d[i] / sub;
                d[i] = sub;
                let tmp = d[i + 1];
                d[i + 1] = du[i] - f * tmp;
                if i + 1 < m - 1 {
                    du2[i] = du[i + 1];
                    du[i + 1] = -f * du2[i];
                }
                du[i] = tmp;
                let bt = b[i];
                b[i] = b[i + 1];
                b[i + 1] = bt - f * b[i + 1];
                dl[i + 1] = zero;
            }
        }
        if d[m - 1] == zero {
            return Err(Error::SingularAssembly("zero pivot in last row".into()));
        }
        let mut x = vec![zero; m];
        x[m - 1] = b[m - 1] / d[m - 1];
        if m > 1 {
            x[m - 2] = (b[m - 2] - du[m - 2] * x[m - 1]) / d[m - 2];
        }
        for i in (0..m.saturating_sub(2)).rev() {
            x[i] = (b[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
        }
        Ok(x)
    }
}

fn l2(v: &[Complex64], w: &[f64]) -> f64 {
    v.iter().zip(w).map(|(z, w)| z.norm_sqr() * w).sum::<f64>().sqrt()
}

pub fn solve_radial(spec: &RadialSolveSpec) -> Result<SolveResult<RadialProfile>> {
    let sys = RadialSystem::assemble(spec)?;
    let r = spec.nodes();
    let f: Vec<Complex64> = r.iter().map(|&x| (spec.f)(x)).collect();
    let v = sys.solve(&f)?;
    let res: Vec<Complex64> = sys.apply(&v).iter().zip(&f).map(|(a, b)| b - a).collect();
    let fnorm = l2(&f, &sys.weights);
    let relative_residual = if fnorm == 0.0 {
        l2(&res, &sys.weights)
    } else {
        l2(&res, &sys.weights) / fnorm
    };
    let ind = spec.truncation_indicator();
    let truncation_warning = (ind < 5.0).then(|| {
        format!("truncation indicator eps*Rmax/(2*sqrt(|lambda|+1)) = {ind:.3} < 5; the outer boundary influences the solution")
    });
    Ok(SolveResult {
        v: RadialProfile {
            n: spec.n,
            r0: spec.r0,
            r_max: spec.r_max,
            r,
            v,
        },
        relative_residual,
        iterations: 1,
        truncation_warning,
        history: vec![relative_residual],
    })
}
