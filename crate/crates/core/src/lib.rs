//! Stationary points and minimizers of one-dimensional energies under a
//! non-local window constraint, with the coil-contact rod model as the main
//! application.
//!
//! The energy is `F(u) = int_0^T a(u) u'^2 + b(u)` with `u(0) = u(T) = 1`,
//! minimized subject to `int_x^{x+1} u >= 0` for all `x in [0, T - 1]`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN. Index loops mirror
// the stencils they implement.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bvp;
pub mod cli;
pub mod coefficients;
pub mod contact_structure;
pub mod continuation;
pub mod error;
pub mod geometry;
pub mod gridfn;
pub mod linalg;
pub mod minimize;
pub mod nnls;
pub mod profile;
pub mod verify;

pub use coefficients::{CoefficientModel, Coefficients, ModelKind};
pub use contact_structure::{ContactStructure, Delta, WeightRule};
pub use error::{Error, Result};
pub use gridfn::{GridFunction, Interval, Solution};
pub use profile::PiecewiseConstant;

/// Environment variable that overrides the default random seed.
pub const SEED_ENV: &str = "COILCONTACT_SEED";
