use crate::error::{Error, Result};

/// Probability weights over a finite action set.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedStrategy {
    weights: Vec<f64>,
}

impl MixedStrategy {
    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::input("strategy over an empty action set"));
        }
        Ok(Self {
            weights: vec![1.0 / k as f64; k],
        })
    }

    /// Builds a strategy from nonnegative weights, normalizing them.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::input("weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::input("weights sum to zero"));
        }
        Ok(Self {
            weights: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Multiplicative-weights step on losses `1 − r̂`:
    /// `w_a ← w_a exp(−η(1 − r̂_a)) / Σ_k w_k exp(−η(1 − r̂_k))`.
    pub fn mw_update(&mut self, reward_estimates: &[f64], eta: f64) -> Result<()> {
        if reward_estimates.len() != self.weights.len() {
            return Err(Error::input(format!(
                "{} reward estimates for {} actions",
                reward_estimates.len(),
                self.weights.len()
            )));
        }
        if let Some(bad) = reward_estimates.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(Error::input(format!(
                "reward estimate {bad} outside [0, 1]; clip before updating"
            )));
        }
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(Error::input(format!("learning rate must be nonnegative, got {eta}")));
        }
        // Losses are shifted by the smallest one so the largest factor is exactly 1.
        let min_loss = reward_estimates
            .iter()
            .map(|r| 1.0 - r)
            .fold(f64::INFINITY, f64::min);
        for (w, r) in self.weights.iter_mut().zip(reward_estimates) {
            *w *= (-eta * ((1.0 - r) - min_loss)).exp();
        }
        let total: f64 = self.weights.iter().sum();
        for w in &mut self.weights {
            *w /= total;
        }
        Ok(())
    }
}

/// Learning rate `sqrt(8 log K / T)` for a finite action set.
pub fn eta_schedule(num_actions: usize, horizon: usize) -> Result<f64> {
    if num_actions < 2 {
        return Err(Error::config(
            "eta",
            format!("learning-rate schedule needs at least 2 actions, got {num_actions}"),
        ));
    }
    if horizon == 0 {
        return Err(Error::config("horizon", "horizon must be at least 1"));
    }
    Ok((8.0 * (num_actions as f64).ln() / horizon as f64).sqrt())
}

/// Learning rate `sqrt(8 d log(L b sqrt(dT)) / T)` for a discretized box
/// `[0, b]^d` with Lipschitz constant `L`.
pub fn eta_schedule_box(dim: usize, side: f64, lipschitz: f64, horizon: usize) -> Result<f64> {
    if dim == 0 || horizon == 0 || !(side > 0.0) || !(lipschitz > 0.0) {
        return Err(Error::config(
            "eta",
            "box schedule needs positive dimension, side, Lipschitz constant and horizon",
        ));
    }
    let d = dim as f64;
    let log_term = (lipschitz * side * (d * horizon as f64).sqrt()).ln();
    if log_term <= 0.0 {
        return Err(Error::config(
            "eta",
            "L·b·sqrt(dT) must exceed 1 for the box learning-rate schedule",
        ));
    }
    Ok((8.0 * d * log_term / horizon as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta_examples() {
        assert!((eta_schedule(2, 8).unwrap() - 2f64.ln().sqrt()).abs() < 1e-15);
        assert!((eta_schedule(2, 8).unwrap() - 0.8326).abs() < 1e-4);
        assert!((eta_schedule(30, 200).unwrap() - 0.3688).abs() < 1e-4);
        let a = eta_schedule(7, 50).unwrap();
        let b = eta_schedule(7, 200).unwrap();
        assert!((a / b - 2.0).abs() < 1e-12);
        assert!(matches!(eta_schedule(1, 10), Err(Error::Config { .. })));
    }

    #[test]
    fn eta_box_matches_formula() {
        let eta = eta_schedule_box(2, 1.0, 2.0, 25).unwrap();
        let expected = (8.0 * 2.0 * (2.0 * 50f64.sqrt()).ln() / 25.0).sqrt();
        assert!((eta - expected).abs() < 1e-15);
        assert!(eta_schedule_box(1, 0.1, 0.1, 4).is_err());
    }

    #[test]
    fn mw_examples() {
        let mut s = MixedStrategy::uniform(3).unwrap();
        s.mw_update(&[0.4, 0.4, 0.4], 1.0).unwrap();
        assert_eq!(s, MixedStrategy::uniform(3).unwrap());

        let mut s = MixedStrategy::from_weights(vec![0.2, 0.8]).unwrap();
        s.mw_update(&[1.0, 0.0], 0.0).unwrap();
        assert!((s.weights()[0] - 0.2).abs() < 1e-15);

        let mut s = MixedStrategy::uniform(2).unwrap();
        s.mw_update(&[1.0, 0.0], 2f64.ln()).unwrap();
        assert!((s.weights()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.weights()[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn mw_rejects_unclipped_estimates() {
        let mut s = MixedStrategy::uniform(2).unwrap();
        assert!(matches!(s.mw_update(&[1.2, 0.0], 0.1), Err(Error::Input(_))));
        assert!(s.mw_update(&[-0.1, 0.0], 0.1).is_err());
        assert!(s.mw_update(&[0.5], 0.1).is_err());
    }
}
