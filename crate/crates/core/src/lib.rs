//! Numerical laboratory for Morawetz multiplier identities, Morrey–Campanato
//! norms and uniform resolvent estimates of the variable-coefficient
//! Helmholtz operator `∇ᵇ·(a∇ᵇv) − cv + (λ+iε)v` on exterior domains.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod conditions;
pub mod error;
pub mod fields;
pub mod harness;
pub mod jet;
pub mod multiplier;
pub mod norms;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
