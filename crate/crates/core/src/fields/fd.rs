use crate::jet::{factorial, space, RJet};

fn stencil(order: u8) -> &'static [(i32, f64)] {
    const D0: [(i32, f64); 1] = [(0, 1.0)];
    const D1: [(i32, f64); 4] = [(-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0)];
    const D2: [(i32, f64); 5] = [
        (-2, -1.0 / 12.0),
        (-1, 16.0 / 12.0),
        (0, -30.0 / 12.0),
        (1, 16.0 / 12.0),
        (2, -1.0 / 12.0),
    ];
    const D3: [(i32, f64); 6] = [
        (-3, 1.0 / 8.0),
        (-2, -1.0),
        (-1, 13.0 / 8.0),
        (1, -13.0 / 8.0),
        (2, 1.0),
        (3, -1.0 / 8.0),
    ];
    const D4: [(i32, f64); 7] = [
        (-3, -1.0 / 6.0),
        (-2, 2.0),
        (-1, -6.5),
        (0, 28.0 / 3.0),
        (1, -6.5),
        (2, 2.0),
        (3, -1.0 / 6.0),
    ];
    match order {
        0 => &D0,
        1 => &D1,
        2 => &D2,
        3 => &D3,
        4 => &D4,
        _ => panic!("finite-difference derivatives limited to order 4 per axis"),
    }
}

/// Step size for a derivative of total order `k` at scale `s = max(1, |x|)`.
pub fn fd_step(k: usize, s: f64) -> f64 {
    let base = match k {
        0 | 1 => 1e-4,
        2 => 1e-3,
        3 => 5e-3,
        _ => 1e-2,
    };
    base * s
}

/// Jets of a value-only field built from 4th-order central differences.
pub fn fd_jets(f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], outputs: usize, order: usize) -> Vec<RJet> {
    let n = x.len();
    let sp = space(n, order);
    let s = x.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
    let mut coefs = vec![vec![0.0; sp.len()]; outputs];
    let base = f(x);
    for (o, c) in coefs.iter_mut().enumerate() {
        c[0] = base[o];
    }
    let mut pt = vec![0.0; n];
    for idx in 1..sp.len() {
        let alpha = sp.monomial(idx).to_vec();
        let k: usize = alpha.iter().map(|&e| e as usize).sum();
        let h = fd_step(k, s);
        let axes: Vec<&[(i32, f64)]> = alpha.iter().map(|&e| stencil(e)).collect();
        let mut acc = vec![0.0; outputs];
        let mut counters = vec![0usize; n];
        'outer: loop {
            let mut w = 1.0;
            for d in 0..n {
                let (off, wt) = axes[d][counters[d]];
                pt[d] = x[d] + off as f64 * h;
                w *= wt;
            }
            let val = f(&pt);
            for o in 0..outputs {
                acc[o] += w * val[o];
            }
            for d in 0..n {
                counters[d] += 1;
                if counters[d] < axes[d].len() {
                    continue 'outer;
                }
                counters[d] = 0;
            }
            break;
        }
        let fact: f64 = alpha.iter().map(|&e| factorial(e as usize)).product();
        let scale = 1.0 / (h.powi(k as i32) * fact);
        for o in 0..outputs {
            coefs[o][idx] = acc[o] * scale;
        }
    }
    coefs
        .into_iter()
        .map(|c| RJet::from_coefficients(n, order, c))
        .collect()
}
