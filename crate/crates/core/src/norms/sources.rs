use super::ShellSource;
use crate::fields::{DomainSpec, TestFunction, VectorField};
use crate::quadrature::{sphere_area, SphereRule};
use num_complex::Complex64;

type RadialDensity = Box<dyn Fn(f64) -> f64 + Send + Sync>;
type PointDensity = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Radially symmetric densities `g_k(|x|)`; `S_k(r) = |S^{n−1}| r^{n−1} g_k(r)`.
pub struct RadialSource {
    n: usize,
    area: f64,
    densities: Vec<RadialDensity>,
    inner: f64,
    outer: f64,
    breakpoints: Vec<f64>,
}

impl RadialSource {
    pub fn new(n: usize, densities: Vec<RadialDensity>) -> Self {
        Self {
            n,
            area: sphere_area(n),
            densities,
            inner: 0.0,
            outer: f64::INFINITY,
            breakpoints: Vec::new(),
        }
    }

    pub fn with_inner(mut self, r0: f64) -> Self {
        self.inner = r0;
        self
    }

    pub fn with_outer(mut self, r1: f64) -> Self {
        self.outer = r1;
        self
    }

    pub fn with_breakpoints(mut self, b: Vec<f64>) -> Self {
        self.breakpoints = b;
        self
    }
}

impl ShellSource for RadialSource {
    fn dim(&self) -> usize {
        self.n
    }

    fn channels(&self) -> usize {
        self.densities.len()
    }

    fn shell(&self, r: f64) -> Vec<f64> {
        let s = self.area * r.powi(self.n as i32 - 1);
        self.densities.iter().map(|g| s * g(r)).collect()
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.breakpoints.clone()
    }

    fn inner_radius(&self) -> f64 {
        self.inner
    }

    fn outer_radius(&self) -> f64 {
        self.outer
    }
}

/// Pointwise densities on `ℝ³` integrated with a product sphere rule;
/// nodes outside the domain contribute zero. Small spheres use coarser rules.
pub struct SphereSource {
    rules: Vec<SphereRule>,
    full_radius: f64,
    channels: usize,
    density: PointDensity,
    domain: DomainSpec,
    outer: f64,
}

impl SphereSource {
    pub fn new(channels: usize, density: PointDensity, domain: DomainSpec, polar_nodes: usize) -> Self {
        let min_nodes = 8.min(polar_nodes);
        Self {
            rules: (min_nodes..=polar_nodes).map(SphereRule::new).collect(),
            full_radius: 2.0,
            channels,
            density,
            domain,
            outer: f64::INFINITY,
        }
    }

    /// Radius from which the finest rule is used.
    pub fn with_full_radius(mut self, r: f64) -> Self {
        self.full_radius = r;
        self
    }

    pub fn with_outer(mut self, r1: f64) -> Self {
        self.outer = r1;
        self
    }
}

impl ShellSource for SphereSource {
    fn dim(&self) -> usize {
        3
    }

    fn channels(&self) -> usize {
        self.channels
    }

    fn shell(&self, r: f64) -> Vec<f64> {
        let mut acc = vec![0.0; self.channels];
        let r2 = r * r;
        let idx = ((r / self.full_radius).min(1.0) * (self.rules.len() - 1) as f64).ceil() as usize;
        let rule = &self.rules[idx];
        for (u, w) in rule.nodes.iter().zip(&rule.weights) {
            let x = [r * u[0], r * u[1], r * u[2]];
            if !self.domain.contains(&x) {
                continue;
            }
            for (a, g) in acc.iter_mut().zip((self.density)(&x)) {
                *a += w * r2 * g;
            }
        }
        acc
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.domain.ball_radius().into_iter().collect()
    }

    fn inner_radius(&self) -> f64 {
        self.domain.ball_radius().unwrap_or(0.0)
    }

    fn outer_radius(&self) -> f64 {
        self.outer
    }
}

/// Piecewise-linear radial densities tabulated at increasing radii.
pub struct ProfileSource {
    n: usize,
    area: f64,
    r: Vec<f64>,
    values: Vec<Vec<f64>>,
    inner: f64,
}

impl ProfileSource {
    /// `values[k][i]` is the density of channel `k` at radius `r[i]`.
    pub fn new(n: usize, r: Vec<f64>, values: Vec<Vec<f64>>, inner: f64) -> Self {
        Self {
            n,
            area: sphere_area(n),
            r,
            values,
            inner,
        }
    }

    fn interp(&self, k: usize, x: f64) -> f64 {
        let r = &self.r;
        if x <= r[0] {
            return self.values[k][0];
        }
        let i = r.partition_point(|&t| t <= x).min(r.len() - 1);
        let (a, b) = (r[i - 1], r[i]);
        let t = (x - a) / (b - a);
        self.values[k][i - 1] * (1.0 - t) + self.values[k][i] * t
    }
}

impl ShellSource for ProfileSource {
    fn dim(&self) -> usize {
        self.n
    }

    fn channels(&self) -> usize {
        self.values.len()
    }

    fn shell(&self, x: f64) -> Vec<f64> {
        let s = self.area * x.powi(self.n as i32 - 1);
        (0..self.values.len()).map(|k| s * self.interp(k, x)).collect()
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.r.clone()
    }

    fn inner_radius(&self) -> f64 {
        self.inner
    }

    fn outer_radius(&self) -> f64 {
        *self.r.last().unwrap()
    }
}

/// Pointwise `(|v|², |∇ᵇv|², |v||∇ᵇv|)` of a test function.
pub fn field_densities(v: &TestFunction, b: &VectorField, x: &[f64]) -> [f64; 3] {
    let (val, grad) = v.value_grad(x);
    let bx = if b.is_zero() { None } else { Some(b.value(x)) };
    let g2: f64 = grad
        .iter()
        .enumerate()
        .map(|(k, g)| match &bx {
            Some(bv) => (g + Complex64::new(0.0, bv[k]) * val).norm_sqr(),
            None => g.norm_sqr(),
        })
        .sum();
    let v0 = val.norm_sqr();
    [v0, g2, (v0 * g2).sqrt()]
}
