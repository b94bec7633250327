#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Unadjusted leapfrog Hamiltonian Monte Carlo for strongly log-concave
//! targets, with the baselines it is compared against (Metropolis-adjusted
//! HMC, MALA, ULA, idealized exact-flow HMC), regularity auditing of the
//! target (incoherence, infinity-norm Lipschitz constants), a planner for the
//! theoretical step-size and gradient budgets, coupling experiments and
//! sampling diagnostics.
//!
//! Module map:
//!
//! - [`model`]: targets, synthetic data, cold starts.
//! - [`dynamics`]: leapfrog integration, exact Gaussian flow, `‖·‖_{∞,u}`.
//! - [`samplers`]: the Markov chains and synchronous coupling.
//! - [`diagnostics`]: marginal accuracy, autocorrelation time, benchmark sweep.
//! - [`regularity`]: constants, Lipschitz searches, planner.
//! - [`scaling`]: the step-size versus dimension experiment.

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod regularity;
pub mod rng;
pub mod samplers;
pub mod scaling;

pub use error::{Error, Result};
