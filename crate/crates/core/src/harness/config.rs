use crate::conditions::{CloudSpec, Mode};
use crate::error::{Error, Result};
use crate::fields::presets::{self, PresetParams};
use crate::fields::{CoefficientSet, DomainSpec, MatrixField, PotentialField, RadialCoefficients, VectorField};
use crate::norms::ShellGrid;
use crate::solver::SolveOptions;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PresetRef {
    pub id: String,
    #[serde(default)]
    pub params: PresetParams,
}

/// Constant principal part with `b = 0`, `c = 0`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConstantCoefficients {
    pub a: Vec<Vec<f64>>,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

fn default_delta() -> f64 {
    0.5
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DomainConfig {
    Whole,
    Ball { r0: f64 },
    Dumbbell,
}

impl DomainConfig {
    pub fn build(&self) -> DomainSpec {
        match self {
            DomainConfig::Whole => DomainSpec::Whole,
            DomainConfig::Ball { r0 } => DomainSpec::Ball { r0: *r0 },
            DomainConfig::Dumbbell => crate::fields::dumbbell(),
        }
    }

    pub fn inner_radius(&self) -> f64 {
        match self {
            DomainConfig::Ball { r0 } => *r0,
            _ => 0.0,
        }
    }
}

/// Radial sources `f(r)`; `ring` is `e^{−((r−center)/width)²}·e^{iφ}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SourceSpec {
    Ring {
        #[serde(default = "two")]
        center: f64,
        #[serde(default = "one")]
        width: f64,
        #[serde(default)]
        phase: f64,
    },
    Gaussian {
        #[serde(default = "one")]
        sigma: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

impl Default for SourceSpec {
    fn default() -> Self {
        SourceSpec::Ring {
            center: 2.0,
            width: 1.0,
            phase: 0.0,
        }
    }
}

impl SourceSpec {
    /// `r ↦ s² f(s r)`; `s = 1` is the source itself.
    pub fn radial(&self, scale: f64) -> Arc<dyn Fn(f64) -> Complex64 + Send + Sync> {
        let s2 = scale * scale;
        match *self {
            SourceSpec::Ring { center, width, phase } => Arc::new(move |r: f64| {
                let t = (scale * r - center) / width;
                Complex64::from_polar(s2 * (-t * t).exp(), phase)
            }),
            SourceSpec::Gaussian { sigma } => Arc::new(move |r: f64| {
                let t = scale * r / sigma;
                Complex64::new(s2 * (-t * t).exp(), 0.0)
            }),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "path", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SolverConfig {
    Radial {
        #[serde(default = "default_r_max")]
        r_max: f64,
        #[serde(default = "default_m")]
        m: usize,
    },
    Grid {
        #[serde(default = "default_half_width")]
        half_width: f64,
        #[serde(default = "default_h")]
        h: f64,
        #[serde(default = "default_tol")]
        tol: f64,
        #[serde(default = "default_restart")]
        restart: usize,
        #[serde(default)]
        max_iter: Option<usize>,
    },
}

fn default_tol() -> f64 {
    SolveOptions::default().tol
}

fn default_restart() -> usize {
    SolveOptions::default().restart
}

fn default_r_max() -> f64 {
    200.0
}

fn default_m() -> usize {
    20000
}

fn default_half_width() -> f64 {
    8.0
}

fn default_h() -> f64 {
    0.25
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig::Radial {
            r_max: default_r_max(),
            m: default_m(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct NormConfig {
    pub grid: ShellGrid,
    /// Largest polar rule on spheres for grid solutions.
    pub polar_nodes: usize,
}

impl Default for NormConfig {
    fn default() -> Self {
        Self {
            grid: ShellGrid::default(),
            polar_nodes: 24,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub lambdas: Vec<f64>,
    pub epsilons: Vec<f64>,
}

impl Default for Sweep {
    fn default() -> Self {
        Self {
            lambdas: vec![-5.0, -1.0, 0.0, 1.0, 5.0, 20.0],
            epsilons: vec![1.0, 0.3, 0.1, 0.03],
        }
    }
}

impl Sweep {
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.lambdas
            .iter()
            .flat_map(|&l| self.epsilons.iter().map(move |&e| (l, e)))
            .collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Assertions {
    /// Relative slack on every asserted inequality.
    pub slack: f64,
    pub thesis: bool,
    pub aux: bool,
}

impl Default for Assertions {
    fn default() -> Self {
        Self {
            slack: 0.02,
            thesis: true,
            aux: true,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub preset: Option<PresetRef>,
    #[serde(default)]
    pub coefficients: Option<ConstantCoefficients>,
    #[serde(default = "default_domain")]
    pub domain: DomainConfig,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default)]
    pub sweep: Sweep,
    #[serde(default)]
    pub source: SourceSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub norms: NormConfig,
    #[serde(default)]
    pub assertions: Assertions,
    #[serde(default)]
    pub conditions: CloudSpec,
    /// Rescaling `f → s²f(s·)`, `λ → s²λ`, `ε → s²ε` of the whole problem.
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_domain() -> DomainConfig {
    DomainConfig::Whole
}

fn default_mode() -> Mode {
    Mode::Homogeneous
}

impl Scenario {
    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)
            .map_err(|e| Error::config(format!("{origin}:{}:{}", e.line(), e.column()), e.to_string()))?;
        s.validate(origin)?;
        Ok(s)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        Self::from_json(&text, &path.display().to_string())
    }

    fn validate(&self, origin: &str) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::config(format!("{origin}: {field}"), msg));
        match (&self.preset, &self.coefficients) {
            (Some(_), Some(_)) => return bad("preset", "give either preset or coefficients, not both".into()),
            (None, None) => return bad("preset", "missing preset or coefficients section".into()),
            _ => {}
        }
        if let Some(e) = self.sweep.epsilons.iter().find(|e| !(**e > 0.0)) {
            return bad("sweep.epsilons", format!("eps = {e} must be positive"));
        }
        if self.sweep.lambdas.iter().any(|l| !l.is_finite()) {
            return bad("sweep.lambdas", "lambda must be finite".into());
        }
        if !(self.scale > 0.0) {
            return bad("scale", format!("{} must be positive", self.scale));
        }
        if let DomainConfig::Ball { r0 } = self.domain {
            if !(r0 > 0.0) {
                return bad("domain.r0", format!("{r0} must be positive"));
            }
        }
        if let Some(c) = &self.coefficients {
            let n = c.a.len();
            if n < 3 || c.a.iter().any(|row| row.len() != n) {
                return bad("coefficients.a", "expected a square matrix of size n ≥ 3".into());
            }
        }
        Ok(())
    }

    pub fn coefficients(&self) -> Result<CoefficientSet> {
        if let Some(p) = &self.preset {
            return presets::build(&p.id, &p.params);
        }
        let c = self.coefficients.as_ref().expect("validated");
        let n = c.a.len();
        let m = DMatrix::from_fn(n, n, |i, j| c.a[i][j]);
        let mut set = CoefficientSet::new(
            "constant",
            c.delta,
            MatrixField::constant(&m),
            VectorField::zero(n),
            PotentialField::zero(n),
        )?;
        let off_diag = (0..n).any(|i| (0..n).any(|j| i != j && m[(i, j)] != 0.0));
        let first = m[(0, 0)];
        if !off_diag && (0..n).all(|i| m[(i, i)] == first) {
            set = set.with_radial(RadialCoefficients {
                alpha: Arc::new(move |_| first),
                c: Arc::new(|_| 0.0),
            });
        }
        Ok(set)
    }

    pub fn preset_id(&self) -> String {
        match &self.preset {
            Some(p) => p.id.clone(),
            None => "constant".into(),
        }
    }
}
