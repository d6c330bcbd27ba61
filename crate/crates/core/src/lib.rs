//! GP-MW: no-regret learning in repeated games with unknown, correlated payoffs.
//!
//! A player that observes its own noisy reward *and* the opponents' actions can
//! fit a Gaussian-process model of its reward function, turn the upper
//! confidence bound of that model into an optimistic full-information reward
//! vector, and feed it to a multiplicative-weights update. This crate provides
//! that learner together with the baselines and environments used to study it:
//!
//! - [`kernel_gp`]: kernels, incremental GP posterior, confidence schedule.
//! - [`learners`]: GP-MW, Hedge, Exp3.P, GP-UCB, StableOpt, uniform random.
//! - [`games`]: random matrix games, traffic routing on TNTP networks, robust BO.
//! - [`harness`]: seeded experiment runs, exact regret accounting, logs and summaries.

pub mod error;
pub mod games;
pub mod harness;
pub mod kernel_gp;
pub mod learners;
pub mod rng;

pub use error::{Error, Result};
