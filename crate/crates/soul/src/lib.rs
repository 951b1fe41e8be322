//! Stochastic optimization via unadjusted Langevin (SOUL): maximum
//! marginal likelihood estimation in latent-variable models, driven by a
//! warm-started unadjusted Langevin sampler inside a projected
//! stochastic-approximation loop.
//!
//! The crate provides the optimizer itself, the three example models
//! (Bayesian logistic regression, audio compressive sensing with a
//! smoothed-Laplace prior, and sparse random-effects logistic regression),
//! plus verification tools: a truncated harmonic-mean marginal likelihood
//! estimator, gradient checkers, schedule admissibility tests and a
//! Monte-Carlo Lyapunov drift checker.

pub mod domain;
pub mod error;
pub mod harness;
pub mod kernel;
pub mod models;
pub mod optimizer;
pub mod rng;
pub mod schedules;
pub mod validation;

pub use domain::{averaged_iterate, project, ParameterDomain, RunTrace, WeightedAverage};
pub use error::{Result, SoulError};
pub use kernel::{run_chain, ula_step};
pub use optimizer::{replicate, soul_run, Model, SoulConfig};
pub use rng::RngStream;
pub use schedules::{check_fixed_batch, check_increasing_batch, ScheduleSet};
