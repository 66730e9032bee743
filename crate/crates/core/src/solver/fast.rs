use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Sine transform (DST-I) along each axis of a `p³` array, through a complex FFT of length `2(p+1)`.
pub struct Dst3 {
    p: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl Dst3 {
    pub fn new(p: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            p,
            fft: planner.plan_fft_forward(2 * (p + 1)),
        }
    }

    fn line(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        let p = self.p;
        let half = Complex64::new(0.0, 0.5);
        let len = 2 * (p + 1);
        buf[0] = Complex64::new(0.0, 0.0);
        buf[p + 1] = Complex64::new(0.0, 0.0);
        for j in 0..p {
            buf[len - 1 - j] = -buf[j + 1];
        }
        self.fft.process_with_scratch(buf, scratch);
        for k in 0..p {
            buf[k] = buf[k + 1] * half;
        }
    }

    /// Unnormalized DST-I in all three directions, in place.
    pub fn transform(&self, data: &mut [Complex64]) {
        let p = self.p;
        let len = 2 * (p + 1);
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        let strides = [p * p, p, 1];
        for (axis, &stride) in strides.iter().enumerate() {
            let others: Vec<usize> = (0..3).filter(|&a| a != axis).map(|a| strides[a]).collect();
            for u in 0..p {
                for w in 0..p {
                    let base = u * others[0] + w * others[1];
                    for j in 0..p {
                        buf[j + 1] = data[base + j * stride];
                    }
                    self.line(&mut buf, &mut scratch);
                    for k in 0..p {
                        data[base + k * stride] = buf[k];
                    }
                }
            }
        }
    }
}

/// Exact inverse of the 7-point operator `Δ_h + z` with zero Dirichlet data on the box.
pub struct FastHelmholtz {
    p: usize,
    dst: Dst3,
    inv: Vec<Complex64>,
}

impl FastHelmholtz {
    pub fn new(p: usize, h: f64, z: Complex64) -> Result<Self> {
        let mu: Vec<f64> = (1..=p)
            .map(|k| {
                let s = (std::f64::consts::PI * k as f64 / (2.0 * (p + 1) as f64)).sin();
                -4.0 * s * s / (h * h)
            })
            .collect();
        let scale = (2.0 / (p + 1) as f64).powi(3);
        let mut inv = Vec::with_capacity(p * p * p);
        for a in &mu {
            for b in &mu {
                for c in &mu {
                    let d = z + (a + b + c);
                    if d.norm() == 0.0 {
                        return Err(Error::SingularAssembly("shift hits a Dirichlet eigenvalue".into()));
                    }
                    inv.push(scale / d);
                }
            }
        }
        Ok(Self {
            p,
            dst: Dst3::new(p),
            inv,
        })
    }

    pub fn solve_in_place(&self, data: &mut [Complex64]) {
        self.dst.transform(data);
        for (d, s) in data.iter_mut().zip(&self.inv) {
            *d *= s;
        }
        self.dst.transform(data);
    }

    pub fn size(&self) -> usize {
        self.p * self.p * self.p
    }
}

/// `Δ_h + z` restricted to the free nodes, inverted through the capacitance matrix of the masked set.
pub struct MaskedHelmholtz {
    fast: FastHelmholtz,
    /// Masked nodes adjacent to a free node; the others never enter a free equation.
    masked: Vec<usize>,
    all_masked: Vec<usize>,
    capacitance: Option<nalgebra::linalg::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>>,
}

impl MaskedHelmholtz {
    pub fn new(p: usize, h: f64, z: Complex64, mask: &[bool]) -> Result<Self> {
        let fast = FastHelmholtz::new(p, h, z)?;
        let masked = active_masked(p, mask);
        let capacitance = if masked.is_empty() {
            None
        } else {
            let m = masked.len();
            let mut c = DMatrix::<Complex64>::zeros(m, m);
            let mut col = vec![Complex64::new(0.0, 0.0); fast.size()];
            for (l, &idx) in masked.iter().enumerate() {
                col.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
                col[idx] = Complex64::new(1.0, 0.0);
                fast.solve_in_place(&mut col);
                for (k, &jdx) in masked.iter().enumerate() {
                    c[(k, l)] = col[jdx];
                }
            }
            Some(c.lu())
        };
        Ok(Self {
            fast,
            masked,
            all_masked: mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect(),
            capacitance,
        })
    }

    /// Solves on the free nodes; masked entries of the result copy the input.
    pub fn apply(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let mut w = rhs.to_vec();
        for &i in &self.all_masked {
            w[i] = Complex64::new(0.0, 0.0);
        }
        let g = w.clone();
        self.fast.solve_in_place(&mut w);
        if let Some(lu) = &self.capacitance {
            let trace = DVector::from_iterator(self.masked.len(), self.masked.iter().map(|&i| -w[i]));
            let sigma = lu.solve(&trace).unwrap_or_else(|| DVector::zeros(self.masked.len()));
            w = g;
            for (k, &i) in self.masked.iter().enumerate() {
                w[i] = sigma[k];
            }
            self.fast.solve_in_place(&mut w);
        }
        for &i in &self.all_masked {
            w[i] = rhs[i];
        }
        w
    }
}

fn active_masked(p: usize, mask: &[bool]) -> Vec<usize> {
    let p = p as i64;
    let free = |i: i64, j: i64, k: i64| {
        i >= 0 && j >= 0 && k >= 0 && i < p && j < p && k < p && !mask[((i * p + j) * p + k) as usize]
    };
    (0..mask.len())
        .filter(|&idx| {
            if !mask[idx] {
                return false;
            }
            let (i, j, k) = ((idx as i64) / (p * p), (idx as i64 / p) % p, idx as i64 % p);
            free(i + 1, j, k)
                || free(i - 1, j, k)
                || free(i, j + 1, k)
                || free(i, j - 1, k)
                || free(i, j, k + 1)
                || free(i, j, k - 1)
        })
        .collect()
}
