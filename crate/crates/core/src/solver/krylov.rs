use crate::error::{Error, Result};
use num_complex::Complex64;

pub(crate) fn dot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub(crate) fn norm2(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub struct GmresOptions {
    pub tol: f64,
    pub restart: usize,
    pub max_iter: usize,
}

pub struct GmresOutcome {
    pub x: Vec<Complex64>,
    pub iterations: usize,
    pub relative_residual: f64,
    pub history: Vec<f64>,
}

/// Right-preconditioned restarted GMRES for `A x = b` starting from zero.
pub fn gmres(
    apply: &dyn Fn(&[Complex64]) -> Vec<Complex64>,
    precond: &dyn Fn(&[Complex64]) -> Vec<Complex64>,
    b: &[Complex64],
    opts: &GmresOptions,
) -> Result<GmresOutcome> {
    let n = b.len();
    let zero = Complex64::new(0.0, 0.0);
    let bnorm = norm2(b);
    let mut x = vec![zero; n];
    let mut history = Vec::new();
    if bnorm == 0.0 {
        return Ok(GmresOutcome {
            x,
            iterations: 0,
            relative_residual: 0.0,
            history: vec![0.0],
        });
    }
    let mut r = b.to_vec();
    let mut total = 0;
    let k = opts.restart.max(1);
    loop {
        let beta = norm2(&r);
        let rel = beta / bnorm;
        history.push(rel);
        if rel <= opts.tol {
            return Ok(GmresOutcome {
                x,
                iterations: total,
                relative_residual: rel,
                history,
            });
        }
        if total >= opts.max_iter {
            return Err(Error::NoConvergence {
                iterations: total,
                residual: rel,
                history,
            });
        }
        let mut basis: Vec<Vec<Complex64>> = vec![r.iter().map(|z| z / beta).collect()];
        let mut hcols: Vec<Vec<Complex64>> = Vec::new();
        let mut cs: Vec<Complex64> = Vec::new();
        let mut sn: Vec<Complex64> = Vec::new();
        let mut g = vec![zero; k + 1];
        g[0] = beta.into();
        let mut used = 0;
        for j in 0..k {
            let w0 = precond(&basis[j]);
            let mut w = apply(&w0);
            let mut h = vec![zero; j + 2];
            // modified Gram–Schmidt, applied twice for stability
            for _ in 0..2 {
                for (i, q) in basis.iter().enumerate() {
                    let c = dot(q, &w);
                    h[i] += c;
                    axpy(-c, q, &mut w);
                }
            }
            let hn = norm2(&w);
            h[j + 1] = hn.into();
            for i in 0..j {
                let t = cs[i].conj() * h[i] + sn[i].conj() * h[i + 1];
                h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
                h[i] = t;
            }
            let (a, bb) = (h[j], h[j + 1]);
            let denom = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            let (c, s) = if denom == 0.0 {
                (Complex64::new(1.0, 0.0), zero)
            } else {
                (a / denom, bb / denom)
            };
            h[j] = c.conj() * a + s.conj() * bb;
            h[j + 1] = zero;
            g[j + 1] = -s * g[j];
            g[j] = c.conj() * g[j];
            cs.push(c);
            sn.push(s);
            hcols.push(h);
            used = j + 1;
            total += 1;
            history.push(g[j + 1].norm() / bnorm);
            if g[j + 1].norm() / bnorm <= opts.tol || hn == 0.0 || total >= opts.max_iter {
                break;
            }
            basis.push(w.iter().map(|z| z / hn).collect());
        }
        history.pop();
        // back substitution for the small triangular system
        let mut y = vec![zero; used];
        for i in (0..used).rev() {
            let mut s = g[i];
            for l in i + 1..used {
                s -= hcols[l][i] * y[l];
            }
            y[i] = s / hcols[i][i];
        }
        let mut update = vec![zero; n];
        for (i, yi) in y.iter().enumerate() {
            axpy(*yi, &basis[i], &mut update);
        }
        let dx = precond(&update);
        axpy(Complex64::new(1.0, 0.0), &dx, &mut x);
        let ax = apply(&x);
        r = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_nonsymmetric_system() {
        let a = [
            [4.0, 1.0, 0.0, 0.5],
            [0.0, 3.0, -1.0, 0.0],
            [1.0, 0.0, 5.0, 2.0],
            [0.0, 2.0, 0.0, 6.0],
        ];
        let apply = |x: &[Complex64]| -> Vec<Complex64> {
            (0..4)
                .map(|i| (0..4).map(|j| x[j] * a[i][j]).sum::<Complex64>() * Complex64::new(1.0, 0.3))
                .collect()
        };
        let id = |x: &[Complex64]| x.to_vec();
        let b: Vec<Complex64> = (0..4).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let opts = GmresOptions {
            tol: 1e-12,
            restart: 2,
            max_iter: 200,
        };
        let out = gmres(&apply, &id, &b, &opts).unwrap();
        let ax = apply(&out.x);
        let err: f64 = ax.iter().zip(&b).map(|(p, q)| (p - q).norm()).sum();
        assert!(err < 1e-10);
    }
}
