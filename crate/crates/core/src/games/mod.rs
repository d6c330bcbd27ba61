//! Repeated-game environments.
//!
//! An environment is a stateless evaluator of joint action profiles. It tells
//! each player what opponent profile it saw (`contexts`), what every own
//! action would have paid against that profile, and how noisy its
//! measurements are. The harness decides which of these quantities a learner
//! is allowed to see.

pub mod matrix;
pub mod robust_bo;
pub mod routing;

use crate::kernel_gp::KernelSpec;
use crate::learners::SharedEncoder;

pub use matrix::{sample_matrix_game, MatrixGame, MatrixSettings};
pub use robust_bo::{load_feature_table, synthetic_profiles, RobustBoGame, RobustBoSettings};
pub use routing::{RoutingGame, RoutingSettings};

/// GP model an environment suggests for one of its players.
#[derive(Clone)]
pub struct GpPrior {
    pub encoder: SharedEncoder,
    pub kernel: KernelSpec,
    pub prior_mean: f64,
}

pub trait Game: Send + Sync {
    fn num_players(&self) -> usize;

    fn num_actions(&self, player: usize) -> usize;

    /// Opponent profile each player faces under a joint action: the other
    /// player's action for two-player games, the occupancy `ψ(a^{-i})` on
    /// `E(i)` for routing.
    fn contexts(&self, joint: &[usize]) -> Vec<Vec<f64>>;

    /// Noiseless payoff in the units regret is reported in.
    fn payoff(&self, player: usize, action: usize, context: &[f64]) -> f64;

    /// Noiseless reward on the learner's `[0, 1]` scale.
    fn reward(&self, player: usize, action: usize, context: &[f64]) -> f64;

    /// Standard deviation of the Gaussian noise on observed rewards.
    fn noise_std(&self, player: usize) -> f64;

    fn prior(&self, _player: usize) -> Option<GpPrior> {
        None
    }

    /// Finite set of opponent profiles for robust selection rules.
    fn adversary_contexts(&self, _player: usize) -> Option<Vec<Vec<f64>>> {
        None
    }

    /// Network-wide congestion of a joint action, where meaningful.
    fn congestion(&self, _joint: &[usize]) -> Option<f64> {
        None
    }

    /// Environment facts worth recording next to the results.
    fn metadata(&self) -> serde_json::Value {
        serde_json::Value::Null
    }
}
