//! Finite element solvers, reduced-basis neural operators and a one-step
//! Newton corrector for nonlinear diffusion-reaction boundary-value problems.

// `!(x > 0.0)` style checks deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corrector;
pub mod error;
pub mod fem;
pub mod grf;
pub mod harness;
pub mod mesh;
pub mod network;
pub mod metrics;
pub mod reduction;
pub mod solver;
pub mod topopt;

pub use error::{Error, Result};
