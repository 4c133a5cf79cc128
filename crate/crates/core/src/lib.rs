//! Grid solver and verification lab for degenerate fully nonlinear free
//! transmission problems
//!
//! ```text
//! |Du|^{θ₁} F(D²u) = f  in {u > 0},    |Du|^{θ₂} F(D²u) = f  in {u < 0},
//! ```
//!
//! with `F` uniformly elliptic and decreasing in the Hessian.

// NaN-rejecting guards are written as `!(x > 0.0)` on purpose, and the
// dense numerics index several arrays with one loop variable.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]

pub mod cli;
pub mod degeneracy;
pub mod error;
pub mod grid;
pub mod io;
pub mod operators;
pub mod regularity;
pub mod solver;
pub mod verification;

pub use error::{Error, Result};
