use std::sync::Arc;

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::config::{EnvironmentConfig, ExperimentConfig, PlayerConfig};
use super::fit::fit_routing_kernels;
use super::ledger::RegretLedger;
use super::log::{EpisodeLog, RoundRecord, StrategySnapshot};
use crate::error::{Error, Result};
use crate::games::{sample_matrix_game, Game, RobustBoGame, RoutingGame};
use crate::learners::{Feedback, FeedbackChannel, Learner, LearnerSetup};
use crate::rng::{derive_seed, rng_from_seed, SimRng};

const GAME_STREAM: u64 = 0x6A3E;
const NOISE_STREAM: u64 = 0x4015E;
const LEARNER_STREAM: u64 = 0x1EA4;

/// Execution knobs that do not change results.
#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    /// Number of repeats run concurrently; 1 runs serially.
    pub parallel: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { parallel: 1 }
    }
}

/// Builds the environment for one repeat (matrix games are resampled per
/// repeat; routing and robust BO are shared by all repeats).
pub fn build_environment(config: &ExperimentConfig, repeat: usize) -> Result<Arc<dyn Game>> {
    let base = base_seed(config)?;
    Ok(match &config.environment {
        EnvironmentConfig::Matrix(m) => {
            let seed = derive_seed(base, &[GAME_STREAM, repeat as u64]);
            Arc::new(sample_matrix_game(m.actions, &m.kernel, m.noise_std, seed)?)
        }
        EnvironmentConfig::Routing(r) => {
            let mut game = RoutingGame::build(r, base)?;
            if let Some(grid) = &r.fit {
                fit_routing_kernels(&mut game, grid, r.kernel.offset, base)?;
            }
            Arc::new(game)
        }
        EnvironmentConfig::RobustBo(r) => Arc::new(RobustBoGame::from_settings(r, base)?),
    })
}

pub fn base_seed(config: &ExperimentConfig) -> Result<u64> {
    config
        .seed
        .ok_or_else(|| Error::config("seed", "no seed set; supply one in the config or on the command line"))
}

/// Runs every repeat of an experiment and returns one log per repeat.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<EpisodeLog>> {
    run_experiment_with(config, RunOptions::default())
}

pub fn run_experiment_with(config: &ExperimentConfig, options: RunOptions) -> Result<Vec<EpisodeLog>> {
    config.validate()?;
    let base = base_seed(config)?;
    let shared = if config.environment.per_repeat() {
        None
    } else {
        Some(build_environment(config, 0)?)
    };
    let run_one = |repeat: usize| -> Result<EpisodeLog> {
        let game = match &shared {
            Some(g) => g.clone(),
            None => build_environment(config, repeat)?,
        };
        run_repeat(config, game.as_ref(), repeat, base)
    };
    if options.parallel <= 1 {
        (0..config.repeats).map(run_one).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.parallel)
            .build()
            .map_err(|e| Error::input(format!("thread pool: {e}")))?;
        pool.install(|| (0..config.repeats).into_par_iter().map(run_one).collect())
    }
}

/// Learner for `player` configured from what the environment suggests.
pub fn build_learner(
    game: &dyn Game,
    player: usize,
    cfg: &PlayerConfig,
    horizon: usize,
    seed: u64,
) -> Result<Box<dyn Learner>> {
    let mut setup = LearnerSetup::new(game.num_actions(player), horizon, seed);
    setup.noise_std = game.noise_std(player);
    if let Some(prior) = game.prior(player) {
        setup.encoder = Some(prior.encoder);
        setup.kernel = Some(prior.kernel);
        setup.prior_mean = prior.prior_mean;
    }
    setup.contexts = game.adversary_contexts(player);
    cfg.learner.build(&setup)
}

struct NoiseSource {
    rng: SimRng,
    normal: Option<Normal<f64>>,
}

impl NoiseSource {
    fn new(std: f64, seed: u64) -> Result<Self> {
        let normal = if std > 0.0 {
            Some(Normal::new(0.0, std).map_err(|e| Error::input(e.to_string()))?)
        } else {
            None
        };
        Ok(Self {
            rng: rng_from_seed(seed),
            normal,
        })
    }

    fn draw(&mut self) -> f64 {
        self.normal.map_or(0.0, |n| n.sample(&mut self.rng))
    }
}

enum Prepared {
    Contextual(f64),
    Full(Vec<f64>),
    Bandit(f64),
    Nothing,
}

fn run_repeat(config: &ExperimentConfig, game: &dyn Game, repeat: usize, base: u64) -> Result<EpisodeLog> {
    let n = game.num_players();
    let assignment = config.assignment(n)?;
    let roles: Vec<String> = assignment.iter().map(PlayerConfig::role).collect();
    let stamp = |round: usize| move |e: Error| Error::Round { repeat, round, source: Box::new(e) };

    let mut learners = assignment
        .iter()
        .enumerate()
        .map(|(p, cfg)| {
            let seed = derive_seed(base, &[LEARNER_STREAM, repeat as u64, p as u64]);
            build_learner(game, p, cfg, config.horizon, seed).map_err(|e| match e {
                Error::Config { path, message } => Error::config(format!("players[{p}].{path}"), message),
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut noise = (0..n)
        .map(|p| NoiseSource::new(game.noise_std(p), derive_seed(base, &[NOISE_STREAM, repeat as u64, p as u64])))
        .collect::<Result<Vec<_>>>()?;
    let mut ledgers: Vec<RegretLedger> = (0..n).map(|p| RegretLedger::new(game.num_actions(p))).collect();

    let mut log = EpisodeLog {
        repeat,
        horizon: config.horizon,
        records: Vec::with_capacity(n * config.horizon),
        snapshots: Vec::new(),
        metadata: game.metadata(),
    };

    let mut actions: Vec<usize> = learners
        .par_iter_mut()
        .map(|l| l.step(None))
        .collect::<Result<_>>()
        .map_err(stamp(1))?;

    for round in 1..=config.horizon {
        let contexts = game.contexts(&actions);
        let congestion = game.congestion(&actions);
        if config.snapshot_every > 0 && round % config.snapshot_every == 0 {
            for (agent, l) in learners.iter().enumerate() {
                if let Some(w) = l.strategy() {
                    log.snapshots.push(StrategySnapshot { round, agent, weights: w.to_vec() });
                }
            }
        }
        let mut prepared = Vec::with_capacity(n);
        for p in 0..n {
            let a = actions[p];
            let ctx = &contexts[p];
            let payoffs: Vec<f64> = (0..game.num_actions(p)).map(|b| game.payoff(p, b, ctx)).collect();
            let regret = ledgers[p].record(&payoffs, a).map_err(stamp(round))?;
            let true_reward = game.reward(p, a, ctx);
            let measured = true_reward + noise[p].draw();
            let (observed, fb) = match learners[p].channel() {
                FeedbackChannel::Contextual => (measured, Prepared::Contextual(measured)),
                FeedbackChannel::Full => (
                    measured,
                    Prepared::Full((0..game.num_actions(p)).map(|b| game.reward(p, b, ctx)).collect()),
                ),
                FeedbackChannel::Bandit => {
                    let clipped = measured.clamp(0.0, 1.0);
                    (clipped, Prepared::Bandit(clipped))
                }
                FeedbackChannel::Imputed => {
                    let query = learners[p]
                        .query_context()
                        .ok_or_else(|| Error::Protocol(format!("player {p} has no query context")))
                        .map_err(stamp(round))?;
                    let y = game.reward(p, a, query) + noise[p].draw();
                    (y, Prepared::Bandit(y))
                }
                FeedbackChannel::Nothing => (measured, Prepared::Nothing),
            };
            log.records.push(RoundRecord {
                round,
                agent: p,
                role: roles[p].clone(),
                action: a,
                true_reward,
                noisy_reward: observed,
                payoff: payoffs[a],
                regret,
                congestion,
            });
            prepared.push(fb);
        }
        if round == config.horizon {
            break;
        }
        actions = learners
            .par_iter_mut()
            .zip(prepared.par_iter())
            .zip(contexts.par_iter())
            .map(|((l, fb), ctx)| {
                let feedback = match fb {
                    Prepared::Contextual(r) => Feedback::Contextual { reward: *r, context: ctx },
                    Prepared::Full(rs) => Feedback::Full { rewards: rs },
                    Prepared::Bandit(r) => Feedback::Bandit { reward: *r },
                    Prepared::Nothing => Feedback::Nothing,
                };
                l.step(Some(feedback))
            })
            .collect::<Result<_>>()
            .map_err(stamp(round + 1))?;
    }
    Ok(log)
}
