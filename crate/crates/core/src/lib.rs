#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Numerical laboratory for finite-volume Anderson Hamiltonians on `Z^d`.
//!
//! The crate builds Dirichlet Laplacians and Anderson Hamiltonians on cubes,
//! counts eigenvalues by matrix inertia, estimates the integrated density of
//! states and the density of states by Monte Carlo disorder averaging, and
//! computes the free-Laplacian quantities that enter the Wegner upper bound
//! `n(E) <= rho_max` and the explicit lower bound `n(E) >= C_delta`.

pub mod disorder;
pub mod error;
pub mod geometry;
pub mod ids;
pub mod levels;
pub mod operator;
pub mod runner;
pub mod spectral;
pub mod wegner;

pub use error::{Error, Result};
