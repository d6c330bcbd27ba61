use rand::{Rng, SeedableRng};

use super::{Feedback, Learner, Variant};
use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Plays uniformly at random and ignores feedback.
#[derive(Clone, Debug)]
pub struct UniformRandom {
    num_actions: usize,
    rng: SimRng,
    rounds: usize,
    started: bool,
}

impl UniformRandom {
    pub fn new(num_actions: usize, seed: u64) -> Result<Self> {
        if num_actions == 0 {
            return Err(Error::input("uniform-random learner needs at least one action"));
        }
        Ok(Self {
            num_actions,
            rng: SimRng::seed_from_u64(seed),
            rounds: 0,
            started: false,
        })
    }
}

impl Learner for UniformRandom {
    fn variant(&self) -> Variant {
        Variant::UniformRandom
    }

    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn step(&mut self, feedback: Option<Feedback<'_>>) -> Result<usize> {
        if self.started && feedback.is_none() {
            return Err(Error::Protocol(
                "uniform-random: missing feedback for the previous round".into(),
            ));
        }
        if self.started {
            self.rounds += 1;
        }
        self.started = true;
        Ok(self.rng.random_range(0..self.num_actions))
    }

    fn rounds(&self) -> usize {
        self.rounds
    }
}
