//! Morawetz weight, multiplier quantities and pointwise checks of the
//! multiplier identities.

mod identities;
mod split;
mod suite;
mod weight;

pub use identities::{
    identity_residual_prop21, identity_residual_thm22, ComplexPotential, IdentityResiduals, Probe, Residual,
};
pub use split::{
    alpha_and_split, apsi_closed_form, boundary_term, commutator_closed_form, magnetic_term, multiplier_terms,
    r_matrix_bound, remainder_bound, s_bound_perturbative, s_bound_ratio, s_matrix_floor, s_outer, s_r_decomposition,
    s_regular, traces, AlphaSplit, BoundaryTerm, MagneticTerm, MultiplierTerms, SRDecomposition, Traces,
};
pub use suite::{run_identity_suite, IdentitySuiteReport, IdentitySuiteSpec};
pub use weight::{weight_derivatives, Phi, Psi, SurfaceTerm, Weight, WeightDerivatives, DEFAULT_SURFACE_MARGIN};

use crate::error::Result;
use crate::fields::{CoefficientSet, TestFunction};
use num_complex::Complex64;

/// `[A^b, ψ]v̄`; closed form for the radial weight, jets otherwise.
pub fn commutator_multiplier(v: &TestFunction, coeffs: &CoefficientSet, psi: &Psi, x: &[f64]) -> Result<Complex64> {
    match psi {
        Psi::Radial(w) => commutator_closed_form(v, coeffs, w, x),
        _ => Probe::new(v, coeffs, psi, Phi::Zero).commutator(x),
    }
}
