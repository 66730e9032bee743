use super::fast::MaskedHelmholtz;
use super::krylov::{gmres, norm2, GmresOptions};
use super::{PointSource, SolveOptions, SolveResult};
use crate::error::{Error, Result};
use crate::fields::{CoefficientSet, DomainSpec, VectorField};
use crate::norms::SphereSource;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Uniform box `[−L, L]³` with `p` interior nodes per axis at `−L + (i+1)h`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct Grid3 {
    pub half_width: f64,
    pub h: f64,
    pub p: usize,
}

impl Grid3 {
    pub fn new(half_width: f64, h: f64) -> Result<Self> {
        if !(half_width > 0.0 && h > 0.0) {
            return Err(Error::InvalidInput(
                "box half-width and mesh size must be positive".into(),
            ));
        }
        let m = 2.0 * half_width / h;
        let mi = m.round();
        if (m - mi).abs() > 1e-9 * m || mi < 3.0 {
            return Err(Error::InvalidInput(format!("2L/h = {m} must be an integer ≥ 3")));
        }
        Ok(Self {
            half_width,
            h,
            p: mi as usize - 1,
        })
    }

    pub fn len(&self) -> usize {
        self.p * self.p * self.p
    }

    pub fn is_empty(&self) -> bool {
        self.p == 0
    }

    pub fn coord(&self, i: i64) -> f64 {
        -self.half_width + (i + 1) as f64 * self.h
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.p + j) * self.p + k
    }

    pub fn ijk(&self, idx: usize) -> [usize; 3] {
        let p = self.p;
        [idx / (p * p), (idx / p) % p, idx % p]
    }

    pub fn point(&self, idx: usize) -> [f64; 3] {
        let [i, j, k] = self.ijk(idx);
        [self.coord(i as i64), self.coord(j as i64), self.coord(k as i64)]
    }

    pub fn points(&self) -> Vec<[f64; 3]> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Nodes masked by the obstacle.
    pub fn mask(&self, domain: &DomainSpec) -> Vec<bool> {
        (0..self.len())
            .into_par_iter()
            .map(|i| !domain.contains(&self.point(i)))
            .collect()
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(3)
    }
}

/// Nodal values on the padded grid `−1 ≤ i ≤ p` (boundary nodes included).
struct Padded<T> {
    q: usize,
    data: Vec<T>,
}

impl<T: Copy + Send + Sync> Padded<T> {
    fn build(grid: &Grid3, f: impl Fn([f64; 3]) -> T + Sync) -> Self {
        let q = grid.p + 2;
        let data = (0..q * q * q)
            .into_par_iter()
            .map(|idx| {
                let (i, j, k) = (idx / (q * q), (idx / q) % q, idx % q);
                f([
                    grid.coord(i as i64 - 1),
                    grid.coord(j as i64 - 1),
                    grid.coord(k as i64 - 1),
                ])
            })
            .collect();
        Self { q, data }
    }

    fn at(&self, i: i64, j: i64, k: i64) -> T {
        let q = self.q as i64;
        self.data[(((i + 1) * q + (j + 1)) * q + (k + 1)) as usize]
    }
}

#[derive(Clone, Debug)]
enum Coef {
    Uniform(Complex64),
    Field(Vec<Complex64>),
}

impl Coef {
    fn at(&self, idx: usize) -> Complex64 {
        match self {
            Coef::Uniform(c) => *c,
            Coef::Field(v) => v[idx],
        }
    }

    fn from_values(values: Vec<Complex64>) -> Option<Self> {
        if values.iter().all(|c| c.norm() == 0.0) {
            return None;
        }
        let first = values[0];
        if values.iter().all(|c| *c == first) {
            Some(Coef::Uniform(first))
        } else {
            Some(Coef::Field(values))
        }
    }
}

/// Assembled discrete `A^b − c` on the interior nodes; `z = λ + iε` is added when applied.
pub struct GridOperator {
    pub grid: Grid3,
    pub mask: Vec<bool>,
    offsets: Vec<([i64; 3], Coef)>,
    diag: Coef,
}

impl GridOperator {
    pub fn assemble(grid: Grid3, coeffs: &CoefficientSet, domain: &DomainSpec) -> Result<Self> {
        if coeffs.n != 3 {
            return Err(Error::InvalidInput(format!("3D solver needs n = 3, got {}", coeffs.n)));
        }
        let mask = grid.mask(domain);
        let p = grid.p;
        let h2 = grid.h * grid.h;
        let npts = grid.len();
        let a_field = &coeffs.a.0;
        let unit = |d: usize| {
            let mut e = [0i64; 3];
            e[d] = 1;
            e
        };
        let avals: Padded<[f64; 9]> = Padded::build(&grid, |x| {
            let v = a_field.values(&x);
            let mut out = [0.0; 9];
            out.copy_from_slice(&v[..9]);
            out
        });
        // a_dd on the face between a node and its forward neighbour in direction d
        let faces: Padded<[f64; 3]> = Padded::build(&grid, |x| {
            let mut out = [0.0; 3];
            for (d, o) in out.iter_mut().enumerate() {
                let mut y = x;
                y[d] += 0.5 * grid.h;
                *o = a_field.values(&y)[4 * d];
            }
            out
        });
        for a in &avals.data {
            for d in 0..3 {
                if !(a[4 * d] > 0.0) || !a[4 * d].is_finite() {
                    return Err(Error::SingularAssembly(format!(
                        "a_{d}{d} = {} is not positive",
                        a[4 * d]
                    )));
                }
            }
        }
        let beta: Option<Padded<[f64; 3]>> = (!coeffs.b.is_zero()).then(|| {
            Padded::build(&grid, |x| {
                let b = coeffs.b.value(&x);
                let a = a_field.values(&x);
                let mut out = [0.0; 3];
                for (j, o) in out.iter_mut().enumerate() {
                    *o = (0..3).map(|k| a[3 * j + k] * b[k]).sum();
                }
                out
            })
        });
        let node = |idx: usize| {
            let [i, j, k] = grid.ijk(idx);
            [i as i64, j as i64, k as i64]
        };
        let shifted = |c: [i64; 3], e: [i64; 3], s: i64| [c[0] + s * e[0], c[1] + s * e[1], c[2] + s * e[2]];
        let mut offsets = Vec::new();
        for d in 0..3 {
            let e = unit(d);
            for s in [1i64, -1] {
                let vals: Vec<Complex64> = (0..npts)
                    .into_par_iter()
                    .map(|idx| {
                        let c = node(idx);
                        let f = if s == 1 { c } else { shifted(c, e, -1) };
                        let mut val = Complex64::new(faces.at(f[0], f[1], f[2])[d] / h2, 0.0);
                        if let Some(beta) = &beta {
                            let nb = shifted(c, e, s);
                            let bsum = beta.at(nb[0], nb[1], nb[2])[d] + beta.at(c[0], c[1], c[2])[d];
                            val += Complex64::new(0.0, s as f64 * bsum / (2.0 * grid.h));
                        }
                        val
                    })
                    .collect();
                if let Some(coef) = Coef::from_values(vals) {
                    let mut off = [0i64; 3];
                    off[d] = s;
                    offsets.push((off, coef));
                }
            }
        }
        for d in 0..3 {
            for e in d + 1..3 {
                let (ud, ue) = (unit(d), unit(e));
                for sd in [1i64, -1] {
                    for se in [1i64, -1] {
                        // D_d(a_de D_e v) + D_e(a_ed D_d v) with centred differences
                        let vals: Vec<Complex64> = (0..npts)
                            .into_par_iter()
                            .map(|idx| {
                                let c = node(idx);
                                let xd = shifted(c, ud, sd);
                                let xe = shifted(c, ue, se);
                                let sum =
                                    avals.at(xd[0], xd[1], xd[2])[3 * d + e] + avals.at(xe[0], xe[1], xe[2])[3 * e + d];
                                Complex64::new((sd * se) as f64 * sum / (4.0 * h2), 0.0)
                            })
                            .collect();
                        if let Some(coef) = Coef::from_values(vals) {
                            let mut off = [0i64; 3];
                            off[d] = sd;
                            off[e] = se;
                            offsets.push((off, coef));
                        }
                    }
                }
            }
        }
        let mut diag_vals: Vec<Complex64> = (0..npts)
            .into_par_iter()
            .map(|idx| {
                let c = node(idx);
                let mut s = 0.0;
                for d in 0..3 {
                    let back = shifted(c, unit(d), -1);
                    s -= (faces.at(c[0], c[1], c[2])[d] + faces.at(back[0], back[1], back[2])[d]) / h2;
                }
                Complex64::new(s, 0.0)
            })
            .collect();
        if let Some(beta) = &beta {
            diag_vals.par_iter_mut().enumerate().for_each(|(idx, dv)| {
                let x = grid.point(idx);
                let b = coeffs.b.value(&x);
                let c = node(idx);
                let bt = beta.at(c[0], c[1], c[2]);
                *dv -= (0..3).map(|k| b[k] * bt[k]).sum::<f64>();
            });
        }
        if !coeffs.c.is_zero() {
            let bad = diag_vals
                .par_iter_mut()
                .enumerate()
                .map(|(idx, dv)| {
                    if mask[idx] {
                        return false;
                    }
                    let cv = coeffs.c.value(&grid.point(idx));
                    *dv -= cv;
                    !cv.is_finite()
                })
                .reduce(|| false, |a, b| a || b);
            if bad {
                return Err(Error::SingularAssembly("potential is not finite at a free node".into()));
            }
        }
        let diag = Coef::from_values(diag_vals).unwrap_or(Coef::Uniform(ZERO));
        let _ = p;
        Ok(Self {
            grid,
            mask,
            offsets,
            diag,
        })
    }

    pub fn has_obstacle(&self) -> bool {
        self.mask.iter().any(|&m| m)
    }

    /// `(A^b − c + z) v` on free nodes; masked nodes act as the identity.
    pub fn apply(&self, v: &[Complex64], z: Complex64) -> Vec<Complex64> {
        let p = self.grid.p as i64;
        let mut out = vec![ZERO; v.len()];
        out.par_chunks_mut((p * p) as usize).enumerate().for_each(|(i, plane)| {
            let i = i as i64;
            for j in 0..p {
                for k in 0..p {
                    let idx = ((i * p + j) * p + k) as usize;
                    if self.mask[idx] {
                        plane[(j * p + k) as usize] = v[idx];
                        continue;
                    }
                    let mut s = (self.diag.at(idx) + z) * v[idx];
                    for (off, coef) in &self.offsets {
                        let (a, b, c) = (i + off[0], j + off[1], k + off[2]);
                        if a < 0 || a >= p || b < 0 || b >= p || c < 0 || c >= p {
                            continue;
                        }
                        let nidx = ((a * p + b) * p + c) as usize;
                        if self.mask[nidx] {
                            continue;
                        }
                        s += coef.at(idx) * v[nidx];
                    }
                    plane[(j * p + k) as usize] = s;
                }
            }
        });
        out
    }
}

/// Discrete complex solution on the interior nodes with its obstacle mask.
#[derive(Clone, Debug)]
pub struct GridField {
    pub grid: Grid3,
    pub v: Vec<Complex64>,
    pub mask: Vec<bool>,
}

impl GridField {
    /// Value at a node of the padded grid; boundary and masked nodes carry zero.
    pub fn node(&self, i: i64, j: i64, k: i64) -> Complex64 {
        let p = self.grid.p as i64;
        if i < 0 || j < 0 || k < 0 || i >= p || j >= p || k >= p {
            return ZERO;
        }
        let idx = self.grid.index(i as usize, j as usize, k as usize);
        if self.mask[idx] {
            ZERO
        } else {
            self.v[idx]
        }
    }

    /// Trilinear interpolation; zero outside the box.
    pub fn value_at(&self, x: &[f64]) -> Complex64 {
        trilinear(&self.grid, x, |i, j, k| self.node(i, j, k))
    }

    pub fn l2_norm(&self) -> f64 {
        norm2(&self.v) * self.grid.cell_volume().sqrt()
    }

    /// `(|v|², |∇ᵇv|², |v||∇ᵇv|)` on the padded grid, with centred differences inside
    /// and one-sided differences on the box faces.
    pub fn densities(&self, b: &VectorField) -> GridDensities {
        let grid = self.grid;
        let p = grid.p as i64;
        let h = grid.h;
        let zero_b = b.is_zero();
        let values = Padded::build(&grid, |_| [0.0; 3]);
        let q = values.q as i64;
        let data: Vec<[f64; 3]> = (0..q * q * q)
            .into_par_iter()
            .map(|idx| {
                let (i, j, k) = (idx / (q * q) - 1, (idx / q) % q - 1, idx % q - 1);
                let c = [i, j, k];
                let val = self.node(i, j, k);
                let x = [grid.coord(i), grid.coord(j), grid.coord(k)];
                let bx = if zero_b {
                    [0.0; 3]
                } else {
                    let b = b.value(&x);
                    [b[0], b[1], b[2]]
                };
                let mut g2 = 0.0;
                for d in 0..3 {
                    let mut fw = c;
                    fw[d] += 1;
                    let mut bw = c;
                    bw[d] -= 1;
                    let deriv = if c[d] == -1 {
                        (self.node(fw[0], fw[1], fw[2]) - val) / h
                    } else if c[d] == p {
                        (val - self.node(bw[0], bw[1], bw[2])) / h
                    } else {
                        (self.node(fw[0], fw[1], fw[2]) - self.node(bw[0], bw[1], bw[2])) / (2.0 * h)
                    };
                    g2 += (deriv + Complex64::new(0.0, bx[d]) * val).norm_sqr();
                }
                let v2 = val.norm_sqr();
                [v2, g2, (v2 * g2).sqrt()]
            })
            .collect();
        GridDensities {
            grid,
            values: Padded { q: values.q, data },
        }
    }
}

fn trilinear<T>(grid: &Grid3, x: &[f64], node: impl Fn(i64, i64, i64) -> T) -> T
where
    T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let mut base = [0i64; 3];
    let mut t = [0.0; 3];
    for d in 0..3 {
        let s = (x[d] + grid.half_width) / grid.h - 1.0;
        if !(s >= -1.0 && s <= grid.p as f64) {
            return T::default();
        }
        let f = s.floor().min(grid.p as f64 - 1.0);
        base[d] = f as i64;
        t[d] = s - f;
    }
    let mut acc = T::default();
    for corner in 0..8 {
        let mut w = 1.0;
        let mut c = base;
        for d in 0..3 {
            if corner >> d & 1 == 1 {
                w *= t[d];
                c[d] += 1;
            } else {
                w *= 1.0 - t[d];
            }
        }
        if w != 0.0 {
            acc = acc + node(c[0], c[1], c[2]) * w;
        }
    }
    acc
}

#[derive(Clone, Copy, Default)]
struct Triple([f64; 3]);

impl std::ops::Add for Triple {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Triple([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl std::ops::Mul<f64> for Triple {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Triple([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

/// Pointwise densities of a grid solution, interpolated trilinearly.
pub struct GridDensities {
    pub grid: Grid3,
    values: Padded<[f64; 3]>,
}

impl GridDensities {
    pub fn at(&self, x: &[f64]) -> [f64; 3] {
        let p = self.grid.p as i64;
        trilinear(&self.grid, x, |i, j, k| {
            if i < -1 || j < -1 || k < -1 || i > p || j > p || k > p {
                Triple::default()
            } else {
                Triple(self.values.at(i, j, k))
            }
        })
        .0
    }

    /// Shell source over the box for the norm functionals.
    pub fn into_source(self, domain: DomainSpec, polar_nodes: usize) -> SphereSource {
        let reach = self.grid.half_width * 3f64.sqrt();
        let full = self.grid.half_width;
        let me = Arc::new(self);
        SphereSource::new(3, Box::new(move |x: &[f64]| me.at(x).to_vec()), domain, polar_nodes)
            .with_full_radius(full)
            .with_outer(reach)
    }
}

/// An assembled operator ready for sweeps over `λ + iε`.
pub struct GridProblem {
    pub op: GridOperator,
    pub domain: DomainSpec,
}

impl GridProblem {
    pub fn new(half_width: f64, h: f64, coeffs: &CoefficientSet, domain: &DomainSpec) -> Result<Self> {
        let grid = Grid3::new(half_width, h)?;
        Ok(Self {
            op: GridOperator::assemble(grid, coeffs, domain)?,
            domain: domain.clone(),
        })
    }

    pub fn grid(&self) -> Grid3 {
        self.op.grid
    }

    /// Samples a source at the free nodes.
    pub fn sample(&self, f: &PointSource) -> Vec<Complex64> {
        let grid = self.op.grid;
        (0..grid.len())
            .into_par_iter()
            .map(|i| if self.op.mask[i] { ZERO } else { f(&grid.point(i)) })
            .collect()
    }

    pub fn solve(
        &self,
        lambda: f64,
        eps: f64,
        rhs: &[Complex64],
        opts: &SolveOptions,
    ) -> Result<SolveResult<GridField>> {
        if !(eps > 0.0) {
            return Err(Error::InvalidInput(format!("eps = {eps} must be positive")));
        }
        let grid = self.op.grid;
        let z = Complex64::new(lambda, eps);
        let pre = MaskedHelmholtz::new(grid.p, grid.h, z, &self.op.mask)?;
        let mut b = rhs.to_vec();
        for (bi, &m) in b.iter_mut().zip(&self.op.mask) {
            if m {
                *bi = ZERO;
            }
        }
        let gopts = GmresOptions {
            tol: opts.tol,
            restart: opts.restart,
            max_iter: opts.max_iter.unwrap_or(10 * grid.p),
        };
        let out = gmres(&|v| self.op.apply(v, z), &|v| pre.apply(v), &b, &gopts)?;
        let ind = eps * grid.half_width / (2.0 * (lambda.abs() + 1.0).sqrt());
        let truncation_warning = (ind < 5.0).then(|| {
            format!(
                "truncation indicator eps*L/(2*sqrt(|lambda|+1)) = {ind:.3} < 5; the box faces influence the solution"
            )
        });
        Ok(SolveResult {
            v: GridField {
                grid,
                v: out.x,
                mask: self.op.mask.clone(),
            },
            relative_residual: out.relative_residual,
            iterations: out.iterations,
            truncation_warning,
            history: out.history,
        })
    }
}

pub struct Grid3DSolveSpec {
    pub half_width: f64,
    pub h: f64,
    pub coeffs: CoefficientSet,
    pub domain: DomainSpec,
    pub lambda: f64,
    pub eps: f64,
    pub f: PointSource,
    pub options: SolveOptions,
}

pub fn solve_3d(spec: &Grid3DSolveSpec) -> Result<SolveResult<GridField>> {
    let problem = GridProblem::new(spec.half_width, spec.h, &spec.coeffs, &spec.domain)?;
    let rhs = problem.sample(&spec.f);
    problem.solve(spec.lambda, spec.eps, &rhs, &spec.options)
}
