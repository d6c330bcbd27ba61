use crate::error::{Error, Result};

/// Exact hindsight regret of one player.
///
/// Keeps `Σ_s r(a, a_s^{-i})` for every own action `a` together with the
/// realized sum, so `R(t) = max_a Σ_s r(a, a_s^{-i}) − Σ_s r(a_s, a_s^{-i})`
/// costs `O(K)` per round.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RegretLedger {
    counterfactual: Vec<f64>,
    realized: f64,
    regret: Vec<f64>,
}

impl RegretLedger {
    pub fn new(num_actions: usize) -> Self {
        Self {
            counterfactual: vec![0.0; num_actions],
            realized: 0.0,
            regret: Vec::new(),
        }
    }

    /// Records one round given the noiseless payoff of every own action
    /// against the opponents' realized profile, and the action played.
    pub fn record(&mut self, payoffs: &[f64], action: usize) -> Result<f64> {
        if payoffs.len() != self.counterfactual.len() || action >= payoffs.len() {
            return Err(Error::input(format!(
                "ledger expects {} payoffs and an action below that, got {} and {action}",
                self.counterfactual.len(),
                payoffs.len()
            )));
        }
        for (c, p) in self.counterfactual.iter_mut().zip(payoffs) {
            *c += p;
        }
        self.realized += payoffs[action];
        let best = self
            .counterfactual
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let r = best - self.realized;
        self.regret.push(r);
        Ok(r)
    }

    pub fn rounds(&self) -> usize {
        self.regret.len()
    }

    /// Cumulative regret after each round.
    pub fn cumulative(&self) -> &[f64] {
        &self.regret
    }

    pub fn counterfactual_sums(&self) -> &[f64] {
        &self.counterfactual
    }

    pub fn regret_series(&self) -> Vec<f64> {
        time_average(&self.regret)
    }
}

/// `R(t)/t` for `t = 1..T`.
pub fn time_average(cumulative: &[f64]) -> Vec<f64> {
    cumulative
        .iter()
        .enumerate()
        .map(|(t, r)| r / (t + 1) as f64)
        .collect()
}

/// Time-averaged regret of an action sequence against a `T × K` table of
/// per-round payoffs.
pub fn regret_series(payoffs: &[Vec<f64>], actions: &[usize]) -> Result<Vec<f64>> {
    if payoffs.len() != actions.len() {
        return Err(Error::input(format!(
            "{} payoff rows for {} actions",
            payoffs.len(),
            actions.len()
        )));
    }
    let k = payoffs.first().map_or(0, Vec::len);
    let mut ledger = RegretLedger::new(k);
    for (row, &a) in payoffs.iter().zip(actions) {
        ledger.record(row, a)?;
    }
    Ok(ledger.regret_series())
}
