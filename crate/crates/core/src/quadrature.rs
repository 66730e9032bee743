//! Gauss–Legendre rules, the product sphere rule and Halton sequences.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if m == 1 {
                p1 = z;
                p0 = 1.0;
            }
            dp = m as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[m - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    (x, w)
}

/// Gauss–Legendre rule mapped to [a, b].
pub fn gauss_interval(m: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(m);
    let h = 0.5 * (b - a);
    x.iter().zip(&w).map(|(xi, wi)| (a + h * (xi + 1.0), h * wi)).collect()
}

/// Product rule on the unit sphere S²: Gauss–Legendre in cos θ times uniform φ.
#[derive(Clone, Debug)]
pub struct SphereRule {
    pub nodes: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    /// `m` polar nodes and `2m` azimuthal nodes; exact for spherical harmonics of degree `< 2m`.
    pub fn new(m: usize) -> Self {
        let (ct, wt) = gauss_legendre(m);
        let np = 2 * m;
        let mut nodes = Vec::with_capacity(m * np);
        let mut weights = Vec::with_capacity(m * np);
        for (c, w) in ct.iter().zip(&wt) {
            let s = (1.0 - c * c).sqrt();
            for k in 0..np {
                let phi = 2.0 * PI * (k as f64 + 0.5) / np as f64;
                nodes.push([s * phi.cos(), s * phi.sin(), *c]);
                weights.push(w * 2.0 * PI / np as f64);
            }
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Surface area of the unit sphere `S^{n−1}`: `2π^{n/2}/Γ(n/2)`.
pub fn sphere_area(n: usize) -> f64 {
    // Γ(n/2) by the half-integer recursion
    let gamma_half = |k: usize| -> f64 {
        if k.is_multiple_of(2) {
            (1..k / 2).map(|i| i as f64).product()
        } else {
            let mut g = PI.sqrt();
            let mut s = 0.5;
            while s < k as f64 / 2.0 - 0.25 {
                g *= s;
                s += 1.0;
            }
            g
        }
    };
    2.0 * PI.powf(n as f64 / 2.0) / gamma_half(n)
}

pub fn first_primes(count: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(count);
    let mut k = 2u64;
    while out.len() < count {
        if out.iter().take_while(|&&p| p * p <= k).all(|&p| !k.is_multiple_of(p)) {
            out.push(k);
        }
        k += 1;
    }
    out
}

/// Radical inverse of `i` in base `b`.
pub fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= b as f64;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}

/// The first `count` points (skipping the origin) of the Halton sequence in `[0,1)^dim`.
pub fn halton(dim: usize, count: usize) -> Vec<Vec<f64>> {
    let primes = first_primes(dim);
    (1..=count as u64)
        .map(|i| primes.iter().map(|&p| radical_inverse(i, p)).collect())
        .collect()
}
