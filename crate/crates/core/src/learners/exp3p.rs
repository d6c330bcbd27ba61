use std::f64::consts::E;

use rand::SeedableRng;

use super::{check_protocol, wrong_feedback, Feedback, Learner, Variant};
use crate::error::{Error, Result};
use crate::rng::{sample_index, SimRng};

/// Exp3.P tuning. Defaults: exploration `γ = min{1, sqrt(K ln K / ((e−1)T))}`,
/// step size `η = 0.95 sqrt(ln K / (KT))` and confidence bonus
/// `α = sqrt(ln(K/δ))`, applied as `α / (p_i sqrt(KT))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Exp3PParams {
    pub gamma: f64,
    pub eta: f64,
    pub alpha: f64,
}

impl Exp3PParams {
    pub fn defaults(num_actions: usize, horizon: usize, delta: f64) -> Result<Self> {
        if num_actions == 0 || horizon == 0 {
            return Err(Error::config("exp3p", "needs at least one action and one round"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::config("exp3p.delta", format!("delta must lie in (0, 1), got {delta}")));
        }
        let k = num_actions as f64;
        let t = horizon as f64;
        let gamma = (k * k.ln() / ((E - 1.0) * t)).sqrt().min(1.0);
        let eta = 0.95 * (k.ln() / (k * t)).sqrt();
        let alpha = (k / delta).ln().sqrt();
        Ok(Self { gamma, eta, alpha })
    }
}

/// Exp3.P: importance-weighted reward estimates plus a confidence bonus, mixed
/// with uniform exploration. Weights are kept in log space.
#[derive(Clone, Debug)]
pub struct Exp3P {
    params: Exp3PParams,
    horizon: usize,
    log_weights: Vec<f64>,
    probs: Vec<f64>,
    rng: SimRng,
    rounds: usize,
    last_action: Option<usize>,
}

impl Exp3P {
    pub fn new(num_actions: usize, horizon: usize, params: Exp3PParams, seed: u64) -> Result<Self> {
        if num_actions == 0 {
            return Err(Error::input("exp3p needs at least one action"));
        }
        if !(0.0..=1.0).contains(&params.gamma) || !(params.alpha >= 0.0) || !(params.eta >= 0.0) {
            return Err(Error::config(
                "exp3p",
                format!(
                    "invalid parameters gamma={} eta={} alpha={}",
                    params.gamma, params.eta, params.alpha
                ),
            ));
        }
        let k = num_actions;
        let mut learner = Self {
            params,
            horizon: horizon.max(1),
            log_weights: vec![0.0; k],
            probs: vec![1.0 / k as f64; k],
            rng: SimRng::seed_from_u64(seed),
            rounds: 0,
            last_action: None,
        };
        learner.refresh_probs();
        Ok(learner)
    }

    pub fn params(&self) -> Exp3PParams {
        self.params
    }

    fn refresh_probs(&mut self) {
        let k = self.log_weights.len() as f64;
        let max = self.log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = self.log_weights.iter().map(|w| (w - max).exp()).collect();
        let total: f64 = exp.iter().sum();
        let gamma = self.params.gamma;
        for (p, w) in self.probs.iter_mut().zip(exp) {
            *p = (1.0 - gamma) * w / total + gamma / k;
        }
    }

    fn update(&mut self, action: usize, reward: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&reward) {
            return Err(Error::input(format!("exp3p reward {reward} outside [0, 1]")));
        }
        let k = self.log_weights.len() as f64;
        let scale = self.params.eta;
        let bonus = self.params.alpha / (k * self.horizon as f64).sqrt();
        for (i, (lw, p)) in self.log_weights.iter_mut().zip(&self.probs).enumerate() {
            let estimate = if i == action { reward / p } else { 0.0 };
            *lw += scale * (estimate + bonus / p);
        }
        self.refresh_probs();
        Ok(())
    }
}

impl Learner for Exp3P {
    fn variant(&self) -> Variant {
        Variant::Exp3p
    }

    fn num_actions(&self) -> usize {
        self.probs.len()
    }

    fn step(&mut self, feedback: Option<Feedback<'_>>) -> Result<usize> {
        check_protocol(Variant::Exp3p, self.last_action.is_some(), &feedback)?;
        if let (Some(f), Some(action)) = (feedback, self.last_action) {
            match f {
                Feedback::Bandit { reward } => self.update(action, reward)?,
                other => return Err(wrong_feedback(Variant::Exp3p, &other)),
            }
            self.rounds += 1;
        }
        let next = sample_index(&mut self.rng, &self.probs);
        self.last_action = Some(next);
        Ok(next)
    }

    fn rounds(&self) -> usize {
        self.rounds
    }

    fn strategy(&self) -> Option<&[f64]> {
        Some(&self.probs)
    }
}
