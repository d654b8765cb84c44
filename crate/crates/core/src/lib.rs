//! Numerical laboratory for the three-dimensional σ₂ Hessian equation
//! `σ₂(D²u) = f(x, u, Du)`.
//!
//! The crate is organised bottom-up:
//!
//! * [`symfun`]: elementary symmetric functions, their derivatives, the Γ₂
//!   cone test and a robust symmetric 3×3 eigen-solver;
//! * [`pointwise`]: the algebraic inequalities on Γ₂ and an infimum search
//!   engine that probes them;
//! * [`calculus`]: jets of manufactured solutions, the differentiated
//!   equation and the residuals of the differential inequalities;
//! * [`solver`]: a cone-preserving damped Newton solver on a uniform grid;
//! * [`graphgeom`]: the gradient graph, its monotonicity and mean-value
//!   functionals;
//! * [`estimates`]: the pointwise test functions and the integral chain.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod calculus;
pub mod error;
pub mod estimates;
pub mod graphgeom;
pub mod grid;
pub mod linalg;
pub mod pointwise;
pub mod rng;
pub mod solver;
pub mod symfun;

pub use error::{Error, Result};
pub use linalg::{Mat3, Sym3Tensor, Sym4Tensor, SymMat3, Vec3};
pub use symfun::{ConeReport, EigenTriple};
