use serde::{Deserialize, Serialize};

use super::{argmax, argmin, check_protocol, wrong_feedback, Feedback, Learner, OutcomeEncoder, SharedEncoder, Variant};
use crate::error::{Error, Result};
use crate::kernel_gp::{ConfidenceSchedule, GpPosterior, Prediction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionRule {
    /// `argmax_m max_i UCB(m, i)`, imputing `argmax_i UCB(m_t, i)`.
    GpUcb,
    /// `argmax_m min_i UCB(m, i)`, imputing `argmin_i LCB(m_t, i)`.
    StableOpt,
}

fn prediction_table(
    gp: &GpPosterior,
    encoder: &dyn OutcomeEncoder,
    contexts: &[Vec<f64>],
) -> Result<Vec<Prediction>> {
    let m = encoder.num_actions();
    if m == 0 || contexts.is_empty() {
        return Err(Error::config(
            "actions",
            "robust selection needs non-empty own and adversary action sets",
        ));
    }
    let queries: Vec<Vec<f64>> = (0..m)
        .flat_map(|a| contexts.iter().map(move |c| encoder.encode(a, c)))
        .collect();
    gp.predict_many(&queries)
}

fn select(
    rule: SelectionRule,
    gp: &GpPosterior,
    beta: f64,
    encoder: &dyn OutcomeEncoder,
    contexts: &[Vec<f64>],
) -> Result<(usize, usize)> {
    let table = prediction_table(gp, encoder, contexts)?;
    let u = contexts.len();
    let rows: Vec<&[Prediction]> = table.chunks(u).collect();
    let ucb_row = |r: &[Prediction]| r.iter().map(|p| p.ucb(beta)).collect::<Vec<_>>();
    let pick = match rule {
        SelectionRule::GpUcb => {
            argmax(rows.iter().map(|r| ucb_row(r).into_iter().fold(f64::NEG_INFINITY, f64::max)))
        }
        SelectionRule::StableOpt => {
            argmax(rows.iter().map(|r| ucb_row(r).into_iter().fold(f64::INFINITY, f64::min)))
        }
    };
    let m = pick.expect("non-empty action set");
    let imputed = match rule {
        SelectionRule::GpUcb => argmax(rows[m].iter().map(|p| p.ucb(beta))),
        SelectionRule::StableOpt => argmin(rows[m].iter().map(|p| p.lcb(beta))),
    };
    Ok((m, imputed.expect("non-empty adversary set")))
}

/// GP-UCB selection against an adversary: returns the own action and the
/// imputed adversary index.
pub fn gpucb_select(
    gp: &GpPosterior,
    beta: f64,
    encoder: &dyn OutcomeEncoder,
    contexts: &[Vec<f64>],
) -> Result<(usize, usize)> {
    select(SelectionRule::GpUcb, gp, beta, encoder, contexts)
}

/// StableOpt max-min selection: returns the own action and the imputed
/// adversary index.
pub fn stableopt_select(
    gp: &GpPosterior,
    beta: f64,
    encoder: &dyn OutcomeEncoder,
    contexts: &[Vec<f64>],
) -> Result<(usize, usize)> {
    select(SelectionRule::StableOpt, gp, beta, encoder, contexts)
}

/// Deterministic GP-UCB / StableOpt player. After each round it is fed the
/// noisy reward measured at its own action and its imputed adversary profile
/// (see [`Learner::query_context`]), delivered as [`Feedback::Bandit`].
pub struct RobustSelector {
    rule: SelectionRule,
    gp: GpPosterior,
    schedule: ConfidenceSchedule,
    encoder: SharedEncoder,
    contexts: Vec<Vec<f64>>,
    pending: Option<(usize, usize)>,
    rounds: usize,
}

impl RobustSelector {
    pub fn new(
        rule: SelectionRule,
        encoder: SharedEncoder,
        contexts: Vec<Vec<f64>>,
        gp: GpPosterior,
        schedule: ConfidenceSchedule,
    ) -> Result<Self> {
        schedule.validate()?;
        if encoder.num_actions() == 0 || contexts.is_empty() {
            return Err(Error::config(
                "actions",
                "robust selection needs non-empty own and adversary action sets",
            ));
        }
        Ok(Self {
            rule,
            gp,
            schedule,
            encoder,
            contexts,
            pending: None,
            rounds: 0,
        })
    }

    pub fn rule(&self) -> SelectionRule {
        self.rule
    }

    pub fn posterior(&self) -> &GpPosterior {
        &self.gp
    }

    /// Adversary index imputed for the current round.
    pub fn imputed_index(&self) -> Option<usize> {
        self.pending.map(|(_, i)| i)
    }
}

impl Learner for RobustSelector {
    fn variant(&self) -> Variant {
        match self.rule {
            SelectionRule::GpUcb => Variant::GpUcb,
            SelectionRule::StableOpt => Variant::Stableopt,
        }
    }

    fn num_actions(&self) -> usize {
        self.encoder.num_actions()
    }

    fn step(&mut self, feedback: Option<Feedback<'_>>) -> Result<usize> {
        let variant = self.variant();
        check_protocol(variant, self.pending.is_some(), &feedback)?;
        if let (Some(f), Some((m, i))) = (feedback, self.pending) {
            match f {
                Feedback::Bandit { reward } => {
                    let point = self.encoder.encode(m, &self.contexts[i]);
                    self.gp.append(point, reward)?;
                }
                other => return Err(wrong_feedback(variant, &other)),
            }
            self.rounds += 1;
        }
        let beta = self.schedule.beta(self.gp.info_gain())?;
        let choice = select(self.rule, &self.gp, beta, self.encoder.as_ref(), &self.contexts)?;
        self.pending = Some(choice);
        Ok(choice.0)
    }

    fn rounds(&self) -> usize {
        self.rounds
    }

    fn query_context(&self) -> Option<&[f64]> {
        self.pending.map(|(_, i)| self.contexts[i].as_slice())
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::kernel_gp::{KernelSpec, Selector};
    use crate::learners::ConcatEncoder;

    // Independent prior per table cell: exact knowledge of a table.
    fn table_gp(table: &[[f64; 2]; 2]) -> (GpPosterior, ConcatEncoder, Vec<Vec<f64>>) {
        let kernel = KernelSpec::product(vec![
            (KernelSpec::Diagonal, Selector::Range { start: 0, end: 1 }),
            (KernelSpec::Diagonal, Selector::Range { start: 1, end: 2 }),
        ]);
        let mut gp = GpPosterior::new(kernel, 1e-10).unwrap();
        for (m, row) in table.iter().enumerate() {
            for (i, v) in row.iter().enumerate() {
                gp.append(vec![m as f64, i as f64], *v).unwrap();
            }
        }
        let enc = ConcatEncoder::new(vec![vec![0.0], vec![1.0]]);
        (gp, enc, vec![vec![0.0], vec![1.0]])
    }

    #[test]
    fn exact_table_rules() {
        let (gp, enc, ctx) = table_gp(&[[1.0, 0.0], [0.6, 0.5]]);
        assert_eq!(gpucb_select(&gp, 0.0, &enc, &ctx).unwrap(), (0, 0));
        assert_eq!(stableopt_select(&gp, 0.0, &enc, &ctx).unwrap(), (1, 1));
    }

    #[test]
    fn empty_gp_ties_to_lowest_index() {
        let gp = GpPosterior::new(KernelSpec::squared_exponential(1.0), 1.0).unwrap();
        let enc = ConcatEncoder::new(vec![vec![0.0], vec![1.0], vec![2.0]]);
        let ctx = vec![vec![0.0], vec![5.0]];
        assert_eq!(gpucb_select(&gp, 2.0, &enc, &ctx).unwrap(), (0, 0));
        assert_eq!(stableopt_select(&gp, 2.0, &enc, &ctx).unwrap(), (0, 0));
    }

    #[test]
    fn empty_sets_are_config_errors() {
        let gp = GpPosterior::new(KernelSpec::squared_exponential(1.0), 1.0).unwrap();
        let enc = ConcatEncoder::new(vec![vec![0.0]]);
        assert!(matches!(
            gpucb_select(&gp, 1.0, &enc, &[]),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn selector_appends_at_imputed_context() {
        let enc: SharedEncoder = Arc::new(ConcatEncoder::new(vec![vec![0.0], vec![1.0]]));
        let gp = GpPosterior::new(KernelSpec::squared_exponential(1.0), 0.01).unwrap();
        let mut l = RobustSelector::new(
            SelectionRule::StableOpt,
            enc,
            vec![vec![0.0], vec![3.0]],
            gp,
            ConfidenceSchedule::new(1.0, 0.1).unwrap(),
        )
        .unwrap();
        let a = l.step(None).unwrap();
        let ctx = l.query_context().unwrap().to_vec();
        l.step(Some(Feedback::Bandit { reward: 0.7 })).unwrap();
        let mut expected = vec![a as f64];
        expected.extend(ctx);
        assert_eq!(l.posterior().points(), &[expected]);
        assert_eq!(l.rounds(), 1);
    }
}
