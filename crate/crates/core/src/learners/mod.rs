//! Learner policies behind a common step interface.
//!
//! A learner is driven once per round: the first call to [`Learner::step`]
//! receives no feedback and returns the first action; every later call receives
//! the feedback for the previous round and returns the next action.

mod config;
mod discretize;
mod exp3p;
mod gpmw;
mod hedge;
mod random;
mod robust;
mod strategy;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use config::{GpParams, LearnerConfig, LearnerSetup};
pub use discretize::{
    discretize_box, grid_points_per_axis, ActionSet, DEFAULT_GRID_BUDGET,
};
pub use exp3p::{Exp3P, Exp3PParams};
pub use gpmw::{optimistic_rewards, GpMw};
pub use hedge::Hedge;
pub use random::UniformRandom;
pub use robust::{gpucb_select, stableopt_select, RobustSelector, SelectionRule};
pub use strategy::{eta_schedule, eta_schedule_box, MixedStrategy};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    GpMw,
    Hedge,
    Exp3p,
    GpUcb,
    Stableopt,
    UniformRandom,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::GpMw => "gp-mw",
            Variant::Hedge => "hedge",
            Variant::Exp3p => "exp3p",
            Variant::GpUcb => "gp-ucb",
            Variant::Stableopt => "stableopt",
            Variant::UniformRandom => "uniform-random",
        }
    }

    /// What the environment must reveal to this learner after each round.
    pub fn channel(self) -> FeedbackChannel {
        match self {
            Variant::GpMw => FeedbackChannel::Contextual,
            Variant::Hedge => FeedbackChannel::Full,
            Variant::Exp3p => FeedbackChannel::Bandit,
            Variant::GpUcb | Variant::Stableopt => FeedbackChannel::Imputed,
            Variant::UniformRandom => FeedbackChannel::Nothing,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Feedback channel a learner variant is entitled to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeedbackChannel {
    /// Own noisy reward plus the opponents' profile (or its aggregate).
    Contextual,
    /// Noiseless reward of every own action.
    Full,
    /// Own noisy reward only.
    Bandit,
    /// Noisy reward measured at the learner's own imputed opponent profile
    /// (see [`Learner::query_context`]).
    Imputed,
    Nothing,
}

/// One round of feedback.
#[derive(Clone, Copy, Debug)]
pub enum Feedback<'a> {
    Contextual { reward: f64, context: &'a [f64] },
    Full { rewards: &'a [f64] },
    Bandit { reward: f64 },
    Nothing,
}

impl Feedback<'_> {
    fn kind(&self) -> &'static str {
        match self {
            Feedback::Contextual { .. } => "contextual",
            Feedback::Full { .. } => "full-information",
            Feedback::Bandit { .. } => "bandit",
            Feedback::Nothing => "empty",
        }
    }
}

/// Maps an own action and an opponent profile to the joint-outcome
/// coordinates a GP model is evaluated on.
pub trait OutcomeEncoder: Send + Sync {
    fn num_actions(&self) -> usize;
    fn encode(&self, action: usize, context: &[f64]) -> Vec<f64>;
}

/// Joint outcome = own action coordinates followed by the opponent profile.
#[derive(Clone, Debug)]
pub struct ConcatEncoder {
    actions: Vec<Vec<f64>>,
}

impl ConcatEncoder {
    pub fn new(actions: Vec<Vec<f64>>) -> Self {
        Self { actions }
    }
}

impl OutcomeEncoder for ConcatEncoder {
    fn num_actions(&self) -> usize {
        self.actions.len()
    }

    fn encode(&self, action: usize, context: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.actions[action].len() + context.len());
        out.extend_from_slice(&self.actions[action]);
        out.extend_from_slice(context);
        out
    }
}

pub type SharedEncoder = Arc<dyn OutcomeEncoder>;

pub trait Learner: Send {
    fn variant(&self) -> Variant;

    fn num_actions(&self) -> usize;

    /// Consumes the previous round's feedback (none on the first call) and
    /// returns the next action index.
    fn step(&mut self, feedback: Option<Feedback<'_>>) -> Result<usize>;

    /// Number of completed feedback updates.
    fn rounds(&self) -> usize;

    /// Current mixed strategy, for variants that keep one.
    fn strategy(&self) -> Option<&[f64]> {
        None
    }

    /// Opponent profile at which an [`FeedbackChannel::Imputed`] learner wants
    /// its next measurement taken.
    fn query_context(&self) -> Option<&[f64]> {
        None
    }

    fn channel(&self) -> FeedbackChannel {
        self.variant().channel()
    }
}

/// Shared first-call / later-call protocol check.
pub(crate) fn check_protocol(
    variant: Variant,
    started: bool,
    feedback: &Option<Feedback<'_>>,
) -> Result<()> {
    match (started, feedback) {
        (false, Some(f)) => Err(Error::Protocol(format!(
            "{variant}: {} feedback supplied before the first action",
            f.kind()
        ))),
        (true, None) => Err(Error::Protocol(format!(
            "{variant}: missing feedback for the previous round"
        ))),
        _ => Ok(()),
    }
}

pub(crate) fn wrong_feedback(variant: Variant, got: &Feedback<'_>) -> Error {
    Error::Protocol(format!(
        "{variant} cannot consume {} feedback",
        got.kind()
    ))
}

/// Index of the largest value; ties go to the lowest index.
pub(crate) fn argmax(values: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Index of the smallest value; ties go to the lowest index.
pub(crate) fn argmin(values: impl IntoIterator<Item = f64>) -> Option<usize> {
    argmax(values.into_iter().map(|v| -v))
}
