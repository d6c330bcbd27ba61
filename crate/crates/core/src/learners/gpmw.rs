use rand::SeedableRng;

use super::strategy::MixedStrategy;
use super::{check_protocol, wrong_feedback, Feedback, Learner, OutcomeEncoder, SharedEncoder, Variant};
use crate::error::{Error, Result};
use crate::kernel_gp::{ConfidenceSchedule, GpPosterior};
use crate::rng::{sample_index, SimRng};

/// Optimistic reward of every own action against one opponent profile:
/// `clip(μ(a, ctx) + β σ(a, ctx), 0, 1)`.
pub fn optimistic_rewards(
    gp: &GpPosterior,
    beta: f64,
    encoder: &dyn OutcomeEncoder,
    context: &[f64],
) -> Result<Vec<f64>> {
    let queries: Vec<Vec<f64>> = (0..encoder.num_actions())
        .map(|a| encoder.encode(a, context))
        .collect();
    Ok(gp
        .predict_many(&queries)?
        .into_iter()
        .map(|p| p.ucb(beta).clamp(0.0, 1.0))
        .collect())
}

/// GP-MW: multiplicative weights driven by GP upper confidence bounds of the
/// reward at the observed opponent profile.
pub struct GpMw {
    strategy: MixedStrategy,
    gp: GpPosterior,
    schedule: ConfidenceSchedule,
    eta: f64,
    encoder: SharedEncoder,
    rng: SimRng,
    rounds: usize,
    last_action: Option<usize>,
    last_beta: f64,
}

impl GpMw {
    pub fn new(
        encoder: SharedEncoder,
        gp: GpPosterior,
        schedule: ConfidenceSchedule,
        eta: f64,
        seed: u64,
    ) -> Result<Self> {
        schedule.validate()?;
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(Error::config("eta", format!("invalid learning rate {eta}")));
        }
        Ok(Self {
            strategy: MixedStrategy::uniform(encoder.num_actions())?,
            gp,
            schedule,
            eta,
            encoder,
            rng: SimRng::seed_from_u64(seed),
            rounds: 0,
            last_action: None,
            last_beta: 0.0,
        })
    }

    pub fn posterior(&self) -> &GpPosterior {
        &self.gp
    }

    /// β used for the most recent strategy update.
    pub fn last_beta(&self) -> f64 {
        self.last_beta
    }

    fn update(&mut self, action: usize, reward: f64, context: &[f64]) -> Result<()> {
        // UCB_t uses the posterior after t−1 observations and β_t from γ_{t−1}.
        let beta = self.schedule.beta(self.gp.info_gain())?;
        let estimates = optimistic_rewards(&self.gp, beta, self.encoder.as_ref(), context)?;
        self.strategy.mw_update(&estimates, self.eta)?;
        self.gp.append(self.encoder.encode(action, context), reward)?;
        self.last_beta = beta;
        Ok(())
    }
}

impl Learner for GpMw {
    fn variant(&self) -> Variant {
        Variant::GpMw
    }

    fn num_actions(&self) -> usize {
        self.strategy.len()
    }

    fn step(&mut self, feedback: Option<Feedback<'_>>) -> Result<usize> {
        check_protocol(Variant::GpMw, self.last_action.is_some(), &feedback)?;
        if let (Some(f), Some(action)) = (feedback, self.last_action) {
            match f {
                Feedback::Contextual { reward, context } => self.update(action, reward, context)?,
                other => return Err(wrong_feedback(Variant::GpMw, &other)),
            }
            self.rounds += 1;
        }
        let next = sample_index(&mut self.rng, self.strategy.weights());
        self.last_action = Some(next);
        Ok(next)
    }

    fn rounds(&self) -> usize {
        self.rounds
    }

    fn strategy(&self) -> Option<&[f64]> {
        Some(self.strategy.weights())
    }
}
