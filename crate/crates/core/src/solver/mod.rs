//! Discrete solvers for `A^b v − cv + (λ+iε)v = f`: a radial path for spherically
//! symmetric data in any dimension and a flux-form finite-difference path in ℝ³.

mod fast;
mod grid;
pub mod io;
mod krylov;
mod mms;
mod radial;

pub use fast::{Dst3, FastHelmholtz, MaskedHelmholtz};
pub use grid::{solve_3d, Grid3, Grid3DSolveSpec, GridDensities, GridField, GridOperator, GridProblem};
pub use krylov::{gmres, GmresOptions, GmresOutcome};
pub use mms::{convergence_study, fit_order, manufactured_rhs, ConvergenceStudy, StudyPath};
pub use radial::{radial_nodes, solve_radial, RadialProfile, RadialSolveSpec, RadialSystem};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

pub type ComplexRadialFn = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;
pub type PointSource = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

/// Krylov settings for the 3D path.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SolveOptions {
    pub tol: f64,
    pub restart: usize,
    /// Defaults to ten times the nodes per axis.
    pub max_iter: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            restart: 30,
            max_iter: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult<V> {
    pub v: V,
    pub relative_residual: f64,
    pub iterations: usize,
    pub truncation_warning: Option<String>,
    pub history: Vec<f64>,
}
