//! Recovery of sparse non-negative vectors from compressed, quantized linear
//! measurements.
//!
//! Starting from quantized data `Q(A)`, `Q(y)` with known perturbation bounds,
//! the crate builds the polytope of all parameter vectors consistent with the
//! data ([`feasible`]), minimizes either the plain l1 norm ([`solvers::solve_l1`])
//! or the concave objective `d*||x||_1 - ||x||_2^2` to certified global
//! optimality ([`solvers::solve_cqp`]), certifies sufficient support-recovery
//! conditions ([`conditions`]), and reproduces the quantization-level sweep
//! benchmarks ([`bench`]).

pub mod bench;
pub mod conditions;
mod error;
pub mod feasible;
pub mod jsonio;
pub mod linalg;
pub mod lp;
pub mod model;
pub mod solvers;

pub use error::{Error, Result};
