//! Separability functions and separability probabilities of two-qubit and
//! qubit-qutrit density matrices.
//!
//! The crate is organised bottom-up:
//!
//! - [`algebra`]: small dense Hermitian matrices over the reals, complex
//!   numbers and quaternions, partial transposition and PSD tests.
//! - [`numerics`]: adaptive Gauss-Kronrod quadrature, simplex QMC
//!   integration and special functions.
//! - [`qmc`]: Sobol and pseudo-random point streams with checkpoints.
//! - [`bloore`]: the Bloore parameterization, canonical diagonals for the
//!   ratio variables and the univariate jacobian.
//! - [`scans`]: sampling drivers producing separability-function tables.
//! - [`sepfit`]: reference models, Dyson-index comparisons and fits.
//! - [`scenarios`]: low-dimensional scenarios with closed-form functions.
//! - [`eigenspace`]: eigenvalue-domain separability functions and measures.
//! - [`registry`]: exact constants, conjectures and the R1 x R2 pipeline.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod bloore;
pub mod eigenspace;
mod error;
pub mod numerics;
pub mod qmc;
pub mod registry;
pub mod scans;
pub mod scenarios;
pub mod sepfit;
mod summary;

pub use error::{Error, Result};
pub(crate) use error::invalid;
pub use summary::{ConjectureMatch, EstimateSummary};
