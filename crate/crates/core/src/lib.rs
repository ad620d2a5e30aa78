//! Néel wall profiles in thin uniaxial films.
//!
//! Minimizes the reduced nonlocal wall energy over angle profiles and checks
//! the structural properties of the minimizer: monotonicity, symmetry,
//! quadratic decay, derivative bounds and uniqueness along the arcsin path.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod corpus;
pub mod energy;
pub mod error;
pub mod greenfn;
pub mod halflap;
pub mod io;
pub mod model;
pub mod path;
pub mod solver;

pub use error::{Error, Result};
