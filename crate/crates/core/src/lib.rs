//! Regularized empirical risk minimization in reproducing kernel Hilbert
//! spaces, distances between finitely supported probability measures, and a
//! seeded Monte Carlo harness that measures how the optimal value of the
//! regularized problem reacts to perturbations of the data distribution.
//!
//! Module map:
//!
//! - [`kernels`]: kernel families, Gram matrices, RKHS norms and calmness growth functions.
//! - [`losses`]: cost functions, subgradients, gauge functions and local Lipschitz data.
//! - [`distributions`]: finite-support measures, seeded sampling, contamination.
//! - [`metrics`]: Wasserstein-1, exact transport, Prokhorov, Fortet-Mourier and `d_phi`.
//! - [`erm`]: closed-form ridge and projected subgradient solvers over the RKHS ball.
//! - [`robustness`]: Monte Carlo experiments and their reports.
//! - [`cli`]: the command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod distributions;
pub mod erm;
pub mod error;
pub mod kernels;
mod linalg;
pub mod losses;
pub mod metrics;
pub mod robustness;

pub use distributions::{DiscreteDistribution, Point};
pub use erm::{ErmConfig, ErmSolution};
pub use error::{Error, Result};
pub use kernels::{KernelFamily, KernelSpec};
pub use losses::{GaugeSpec, LossFamily, LossSpec};
