use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Game, GpPrior};
use crate::error::{Error, Result};
use crate::kernel_gp::linalg::cholesky_with_jitter;
use crate::kernel_gp::{gram_matrix, KernelSpec};
use crate::learners::OutcomeEncoder;
use crate::rng::rng_from_seed;

/// Spread below which a sampled table is treated as constant.
pub const DEGENERATE_SPREAD: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSettings {
    /// Actions per player.
    pub actions: usize,
    #[serde(default = "default_kernel")]
    pub kernel: KernelSpec,
    /// Noise standard deviation in the units of the raw GP sample; the game
    /// divides it by the rescaling range.
    #[serde(default = "default_noise")]
    pub noise_std: f64,
}

fn default_kernel() -> KernelSpec {
    KernelSpec::squared_exponential(6.0)
}

fn default_noise() -> f64 {
    1.0
}

impl MatrixSettings {
    pub fn validate(&self) -> Result<()> {
        if self.actions < 2 {
            return Err(Error::config(
                "environment.actions",
                format!("matrix games need at least 2 actions, got {}", self.actions),
            ));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(Error::config("environment.noise_std", "must be nonnegative"));
        }
        self.kernel
            .validate()
            .map_err(|e| Error::config("environment.kernel", e.to_string()))?;
        if self.kernel.min_input_dim() > 2 {
            return Err(Error::config(
                "environment.kernel",
                "matrix-game kernels act on 2-coordinate (row, column) points",
            ));
        }
        Ok(())
    }
}

/// Two-player game on a `K × K` table. Player 0 picks the row, player 1 the
/// column; `tables[p]` is stored row-major and indexed `[row][column]`.
#[derive(Clone, Debug)]
pub struct MatrixGame {
    k: usize,
    tables: [Vec<f64>; 2],
    noise_std: f64,
    prior: Option<(KernelSpec, f64)>,
    transform: Option<(f64, f64)>,
}

impl MatrixGame {
    pub fn new(k: usize, tables: [Vec<f64>; 2], noise_std: f64) -> Result<Self> {
        if k == 0 || tables.iter().any(|t| t.len() != k * k) {
            return Err(Error::input(format!("payoff tables must be {k} x {k}")));
        }
        if tables.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::input("payoff tables contain non-finite entries"));
        }
        Ok(Self {
            k,
            tables,
            noise_std,
            prior: None,
            transform: None,
        })
    }

    /// Attach the GP prior learners should use for this table.
    pub fn with_prior(mut self, kernel: KernelSpec, mean: f64) -> Self {
        self.prior = Some((kernel, mean));
        self
    }

    pub fn num_actions(&self) -> usize {
        self.k
    }

    pub fn table(&self, player: usize) -> &[f64] {
        &self.tables[player]
    }

    pub fn entry(&self, player: usize, row: usize, col: usize) -> f64 {
        self.tables[player][row * self.k + col]
    }

    /// `(min, max − min)` of the raw GP sample, or `None` for a hand-built
    /// or degenerate table.
    pub fn rescale_transform(&self) -> Option<(f64, f64)> {
        self.transform
    }

    /// Payoff of `own` for `player` against the opponent's `other`.
    pub fn value(&self, player: usize, own: usize, other: usize) -> f64 {
        if player == 0 {
            self.entry(0, own, other)
        } else {
            self.entry(1, other, own)
        }
    }
}

/// Draws `r¹ = r² ~ GP(0, k)` on the `K × K` index grid and rescales the
/// table to `[0, 1]`. A table with spread below [`DEGENERATE_SPREAD`] becomes
/// the constant 0.5.
///
/// Learners get the matching prior: the rescaled sample is distributed as
/// `GP(−min/range, k/range²)`. `noise_std` is given in raw sample units and
/// scaled by `1/range` along with the table.
pub fn sample_matrix_game(k: usize, kernel: &KernelSpec, noise_std: f64, seed: u64) -> Result<MatrixGame> {
    if k < 2 {
        return Err(Error::config("environment.actions", "matrix games need K >= 2"));
    }
    kernel.validate()?;
    let points: Vec<Vec<f64>> = (0..k * k)
        .map(|idx| vec![(idx / k) as f64, (idx % k) as f64])
        .collect();
    let n = points.len();
    let gram = gram_matrix(kernel, &points)?;
    let (factor, _) = cholesky_with_jitter(&gram, n)?;
    let mut rng = rng_from_seed(seed);
    let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let raw: Vec<f64> = (0..n)
        .map(|i| (0..=i).map(|j| factor[i * n + j] * z[j]).sum())
        .collect();
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = hi - lo;
    let game = if spread < DEGENERATE_SPREAD {
        let table = vec![0.5; n];
        MatrixGame::new(k, [table.clone(), table], noise_std)?
            .with_prior(KernelSpec::scaled(1e-6, kernel.clone()), 0.5)
    } else {
        let table: Vec<f64> = raw.iter().map(|x| (x - lo) / spread).collect();
        let mut g = MatrixGame::new(k, [table.clone(), table], noise_std / spread)?
            .with_prior(KernelSpec::scaled(1.0 / (spread * spread), kernel.clone()), -lo / spread);
        g.transform = Some((lo, spread));
        g
    };
    Ok(game)
}

/// Encodes `(own, other)` as the table coordinate `(row, column)`.
struct TableEncoder {
    k: usize,
    player: usize,
}

impl OutcomeEncoder for TableEncoder {
    fn num_actions(&self) -> usize {
        self.k
    }

    fn encode(&self, action: usize, context: &[f64]) -> Vec<f64> {
        if self.player == 0 {
            vec![action as f64, context[0]]
        } else {
            vec![context[0], action as f64]
        }
    }
}

impl Game for MatrixGame {
    fn num_players(&self) -> usize {
        2
    }

    fn num_actions(&self, _player: usize) -> usize {
        self.k
    }

    fn contexts(&self, joint: &[usize]) -> Vec<Vec<f64>> {
        vec![vec![joint[1] as f64], vec![joint[0] as f64]]
    }

    fn payoff(&self, player: usize, action: usize, context: &[f64]) -> f64 {
        self.value(player, action, context[0] as usize)
    }

    fn reward(&self, player: usize, action: usize, context: &[f64]) -> f64 {
        self.payoff(player, action, context)
    }

    fn noise_std(&self, _player: usize) -> f64 {
        self.noise_std
    }

    fn prior(&self, player: usize) -> Option<GpPrior> {
        let (kernel, prior_mean) = self.prior.clone()?;
        Some(GpPrior {
            encoder: Arc::new(TableEncoder { k: self.k, player }),
            kernel,
            prior_mean,
        })
    }

    fn metadata(&self) -> serde_json::Value {
        match self.transform {
            Some((min, range)) => serde_json::json!({ "rescale": { "min": min, "range": range } }),
            None => serde_json::json!({ "rescale": null }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_identical_and_in_unit_interval() {
        let g = sample_matrix_game(5, &KernelSpec::squared_exponential(2.0), 1.0, 7).unwrap();
        assert_eq!(g.table(0), g.table(1));
        assert!(g.table(0).iter().all(|x| (0.0..=1.0).contains(x)));
        let lo = g.table(0).iter().copied().fold(f64::INFINITY, f64::min);
        let hi = g.table(0).iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!((lo, hi), (0.0, 1.0));
    }

    #[test]
    fn same_seed_same_table() {
        let k = KernelSpec::squared_exponential(3.0);
        let a = sample_matrix_game(6, &k, 1.0, 11).unwrap();
        let b = sample_matrix_game(6, &k, 1.0, 11).unwrap();
        let c = sample_matrix_game(6, &k, 1.0, 12).unwrap();
        assert_eq!(a.table(0), b.table(0));
        assert_ne!(a.table(0), c.table(0));
    }

    #[test]
    fn player_views() {
        let g = MatrixGame::new(2, [vec![0.1, 0.2, 0.3, 0.4], vec![0.5, 0.6, 0.7, 0.8]], 0.0).unwrap();
        let ctx = g.contexts(&[1, 0]);
        assert_eq!(g.payoff(0, 1, &ctx[0]), 0.3);
        assert_eq!(g.payoff(1, 0, &ctx[1]), 0.7);
    }

    #[test]
    fn rejects_small_k() {
        assert!(sample_matrix_game(1, &KernelSpec::squared_exponential(1.0), 1.0, 0).is_err());
    }
}
