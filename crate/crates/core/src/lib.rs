//! Numerical laboratory for the Camassa-Holm equation
//! `u_t + u u_x + (1 - d_xx)^{-1} d_x (u^2 + u_x^2/2) = 0`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod characteristics;
pub mod diagnostics;
pub mod eigen;
pub mod error;
mod expsum;
pub mod grid;
pub mod harness;
pub mod kernels;
pub mod measures;
pub mod field_solver;
pub mod modulation;
pub mod multipeakon;
mod quadrature;
pub mod tolerances;
pub mod trajectory;

pub use error::{Error, Result};
