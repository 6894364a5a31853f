//! Accelerated zeroth-order and first-order momentum methods for stochastic
//! mini- and minimax-optimization, with a small experiment harness.
//!
//! The optimizers live in [`optimizers`]; objectives implement the oracle
//! traits in [`problems`]; [`estimators`] turns function values into
//! gradient estimates and counts every oracle call.

// Negated float comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod constraint;
pub mod error;
pub mod estimators;
pub mod metrics;
pub mod optimizers;
pub mod problems;
pub mod rng;
pub mod trace;
pub mod vector;

pub use constraint::ConstraintSet;
pub use error::{Error, Result};
pub use vector::Vector;
