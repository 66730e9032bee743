use super::{norm, Field, MatrixField};
use crate::error::{Error, Result};
use crate::jet::RJet;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr_normal::sample_direction;
use serde::Serialize;
use std::sync::Arc;

/// Obstacle description; the domain is the complement of the obstacle.
#[derive(Clone, Debug)]
pub enum DomainSpec {
    Whole,
    Ball {
        r0: f64,
    },
    /// Obstacle `{φ < 0}` contained in the ball of radius `bound`.
    LevelSet {
        name: String,
        phi: Field,
        bound: f64,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundarySample {
    pub point: Vec<f64>,
    /// Exterior normal of the domain (pointing into the obstacle).
    pub normal: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct StarshapedReport {
    pub pass: bool,
    pub worst_value: f64,
    pub worst_point: Vec<f64>,
    pub samples: usize,
}

mod rand_distr_normal {
    use rand::Rng;

    /// Uniform direction on `S^{n−1}` by normalizing a Box–Muller Gaussian vector.
    pub fn sample_direction<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..n)
                .map(|_| {
                    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
                    let u2: f64 = rng.gen();
                    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
                })
                .collect();
            let r = super::norm(&v);
            if r > 1e-12 {
                return v.iter().map(|c| c / r).collect();
            }
        }
    }
}

/// Fibonacci lattice on the unit 2-sphere.
pub fn fibonacci_sphere(count: usize) -> Vec<Vec<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
            let rho = (1.0 - z * z).sqrt();
            let th = golden * i as f64;
            vec![rho * th.cos(), rho * th.sin(), z]
        })
        .collect()
}

fn directions(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    if n == 3 {
        fibonacci_sphere(count)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| sample_direction(&mut rng, n)).collect()
    }
}

impl DomainSpec {
    pub fn is_empty(&self) -> bool {
        matches!(self, DomainSpec::Whole)
    }

    /// Whether `x` lies in the closed domain.
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            DomainSpec::Whole => true,
            DomainSpec::Ball { r0 } => norm(x) >= *r0,
            DomainSpec::LevelSet { phi, .. } => phi.values(x)[0] >= 0.0,
        }
    }

    /// Radius of a ball obstacle, if the obstacle is a ball.
    pub fn ball_radius(&self) -> Option<f64> {
        match self {
            DomainSpec::Ball { r0 } => Some(*r0),
            _ => None,
        }
    }

    /// Radius beyond which the domain contains everything.
    pub fn bounding_radius(&self) -> f64 {
        match self {
            DomainSpec::Whole => 0.0,
            DomainSpec::Ball { r0 } => *r0,
            DomainSpec::LevelSet { bound, .. } => *bound,
        }
    }

    /// Boundary points with exterior normals.
    pub fn boundary_samples(&self, n: usize, nsamples: usize, seed: u64) -> Result<Vec<BoundarySample>> {
        match self {
            DomainSpec::Whole => Ok(Vec::new()),
            DomainSpec::Ball { r0 } => Ok(directions(n, nsamples, seed)
                .into_iter()
                .map(|u| BoundarySample {
                    point: u.iter().map(|c| c * r0).collect(),
                    normal: u.iter().map(|c| -c).collect(),
                })
                .collect()),
            DomainSpec::LevelSet { phi, bound, .. } => {
                let scan = 400;
                let mut out = Vec::new();
                for u in directions(n, nsamples, seed) {
                    let at = |t: f64| -> f64 {
                        let p: Vec<f64> = u.iter().map(|c| c * t).collect();
                        phi.values(&p)[0]
                    };
                    let dt = bound / scan as f64;
                    let mut t0 = 0.0;
                    let mut f0 = at(0.0);
                    for k in 1..=scan {
                        let t1 = dt * k as f64;
                        let f1 = at(t1);
                        if (f0 < 0.0) != (f1 < 0.0) {
                            let (mut lo, mut hi, flo) = (t0, t1, f0);
                            for _ in 0..60 {
                                let mid = 0.5 * (lo + hi);
                                if (at(mid) < 0.0) == (flo < 0.0) {
                                    lo = mid;
                                } else {
                                    hi = mid;
                                }
                            }
                            let t = 0.5 * (lo + hi);
                            let point: Vec<f64> = u.iter().map(|c| c * t).collect();
                            let grad = phi.jets(&point, 1)[0].gradient();
                            let g = norm(&grad);
                            if g < 1e-12 {
                                return Err(Error::DegenerateNormal { point });
                            }
                            out.push(BoundarySample {
                                point,
                                normal: grad.iter().map(|c| -c / g).collect(),
                            });
                        }
                        t0 = t1;
                        f0 = f1;
                    }
                }
                Ok(out)
            }
        }
    }
}

/// Evaluate `a(x)x·ν` on boundary samples; the obstacle is a-starshaped iff the max is ≤ 0.
pub fn starshaped_check(domain: &DomainSpec, a: &MatrixField, nsamples: usize) -> Result<StarshapedReport> {
    let n = a.dim();
    let samples = domain.boundary_samples(n, nsamples, 0x5eed)?;
    let mut worst = f64::NEG_INFINITY;
    let mut worst_point = vec![0.0; n];
    for s in &samples {
        let m = a.value(&s.point);
        let mut val = 0.0;
        for i in 0..n {
            for j in 0..n {
                val += m[(i, j)] * s.point[j] * s.normal[i];
            }
        }
        if val > worst {
            worst = val;
            worst_point = s.point.clone();
        }
    }
    if samples.is_empty() {
        return Ok(StarshapedReport {
            pass: true,
            worst_value: 0.0,
            worst_point,
            samples: 0,
        });
    }
    Ok(StarshapedReport {
        pass: worst <= 1e-12,
        worst_value: worst,
        worst_point,
        samples: samples.len(),
    })
}

fn jet_min(a: RJet, b: RJet) -> RJet {
    if a.value() <= b.value() {
        a
    } else {
        b
    }
}

fn jet_max(a: RJet, b: RJet) -> RJet {
    if a.value() >= b.value() {
        a
    } else {
        b
    }
}

/// Two unit balls at `(±1.5, 0, 0)` joined by a neck of radius 0.3; not starshaped.
pub fn dumbbell() -> DomainSpec {
    let phi = move |xs: &[RJet]| -> Vec<RJet> {
        let ball = |cx: f64| {
            let dx = xs[0].add_const(-cx);
            (&(&dx.mul_jet(&dx) + &xs[1].mul_jet(&xs[1])) + &xs[2].mul_jet(&xs[2]))
                .sqrt()
                .add_const(-1.0)
        };
        let rho = (&xs[1].mul_jet(&xs[1]) + &xs[2].mul_jet(&xs[2])).sqrt().add_const(-0.3);
        let cap = if xs[0].value() >= 0.0 {
            xs[0].add_const(-1.5)
        } else {
            (-&xs[0]).add_const(-1.5)
        };
        let neck = jet_max(rho, cap);
        vec![jet_min(jet_min(ball(1.5), ball(-1.5)), neck)]
    };
    DomainSpec::LevelSet {
        name: "dumbbell".into(),
        phi: Field::analytic(3, 1, Arc::new(phi)),
        bound: 3.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn ball_is_starshaped() {
        let r = starshaped_check(&DomainSpec::Ball { r0: 1.0 }, &MatrixField::identity(3), 200).unwrap();
        assert!(r.pass);
        assert!((r.worst_value + 1.0).abs() < 1e-12);
        let a = MatrixField::constant(&DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            1.0, 1.0, 2.0,
        ])));
        let r = starshaped_check(&DomainSpec::Ball { r0: 2.0 }, &a, 2000).unwrap();
        assert!(r.pass);
        assert!((r.worst_value + 2.0).abs() < 1e-3);
    }

    #[test]
    fn dumbbell_fails() {
        let r = starshaped_check(&dumbbell(), &MatrixField::identity(3), 400).unwrap();
        assert!(!r.pass);
        assert!(r.worst_value > 0.0);
    }

    #[test]
    fn whole_space_passes_trivially() {
        let r = starshaped_check(&DomainSpec::Whole, &MatrixField::identity(3), 10).unwrap();
        assert!(r.pass && r.samples == 0);
    }
}
