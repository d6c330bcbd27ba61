use rand::SeedableRng;

use super::strategy::MixedStrategy;
use super::{check_protocol, wrong_feedback, Feedback, Learner, Variant};
use crate::error::Result;
use crate::rng::{sample_index, SimRng};

/// Multiplicative weights on the full reward vector.
#[derive(Clone, Debug)]
pub struct Hedge {
    strategy: MixedStrategy,
    eta: f64,
    rng: SimRng,
    rounds: usize,
    started: bool,
}

impl Hedge {
    pub fn new(num_actions: usize, eta: f64, seed: u64) -> Result<Self> {
        Ok(Self {
            strategy: MixedStrategy::uniform(num_actions)?,
            eta,
            rng: SimRng::seed_from_u64(seed),
            rounds: 0,
            started: false,
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

impl Learner for Hedge {
    fn variant(&self) -> Variant {
        Variant::Hedge
    }

    fn num_actions(&self) -> usize {
        self.strategy.len()
    }

    fn step(&mut self, feedback: Option<Feedback<'_>>) -> Result<usize> {
        check_protocol(Variant::Hedge, self.started, &feedback)?;
        if let Some(f) = feedback {
            match f {
                Feedback::Full { rewards } => self.strategy.mw_update(rewards, self.eta)?,
                other => return Err(wrong_feedback(Variant::Hedge, &other)),
            }
            self.rounds += 1;
        }
        self.started = true;
        Ok(sample_index(&mut self.rng, self.strategy.weights()))
    }

    fn rounds(&self) -> usize {
        self.rounds
    }

    fn strategy(&self) -> Option<&[f64]> {
        Some(self.strategy.weights())
    }
}
