use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::games::routing::KernelGrid;
use crate::games::{Game, RoutingGame};
use crate::kernel_gp::{GpPosterior, KernelSpec};
use crate::rng::{derive_seed, rng_from_seed};

const FIT_STREAM: u64 = 0xF17;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitResult {
    pub kernel: KernelSpec,
    pub index: usize,
    pub log_marginal_likelihood: f64,
}

/// Noisy observations of `player`'s reward at uniformly random joint
/// outcomes, encoded the way the environment's GP model sees them.
pub fn sample_outcomes(
    game: &dyn Game,
    player: usize,
    samples: usize,
    seed: u64,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let prior = game
        .prior(player)
        .ok_or_else(|| Error::config("fit", format!("player {player} has no GP model to fit")))?;
    let mut rng = rng_from_seed(seed);
    let std = game.noise_std(player);
    let normal = (std > 0.0)
        .then(|| Normal::new(0.0, std))
        .transpose()
        .map_err(|e| Error::input(e.to_string()))?;
    let mut xs = Vec::with_capacity(samples);
    let mut ys = Vec::with_capacity(samples);
    for _ in 0..samples {
        let joint: Vec<usize> = (0..game.num_players())
            .map(|p| rng.random_range(0..game.num_actions(p)))
            .collect();
        let ctx = game.contexts(&joint);
        let a = joint[player];
        xs.push(prior.encoder.encode(a, &ctx[player]));
        let eps = normal.map_or(0.0, |n| n.sample(&mut rng));
        ys.push(game.reward(player, a, &ctx[player]) + eps);
    }
    Ok((xs, ys))
}

/// Grid search for the candidate with the largest log marginal likelihood
/// on `(points, observations)`. Ties keep the earlier candidate; candidates
/// whose factorization fails are skipped.
pub fn select_kernel(
    candidates: &[KernelSpec],
    points: &[Vec<f64>],
    observations: &[f64],
    noise_variance: f64,
    prior_mean: f64,
) -> Result<FitResult> {
    if candidates.is_empty() {
        return Err(Error::config("fit", "no candidate kernels"));
    }
    if candidates.len() == 1 {
        return Ok(FitResult {
            kernel: candidates[0].clone(),
            index: 0,
            log_marginal_likelihood: lml(&candidates[0], points, observations, noise_variance, prior_mean)
                .unwrap_or(f64::NEG_INFINITY),
        });
    }
    let mut best: Option<FitResult> = None;
    let mut last_err = None;
    for (index, kernel) in candidates.iter().enumerate() {
        match lml(kernel, points, observations, noise_variance, prior_mean) {
            Ok(v) if v.is_finite() => {
                if best.as_ref().is_none_or(|b| v > b.log_marginal_likelihood) {
                    best = Some(FitResult {
                        kernel: kernel.clone(),
                        index,
                        log_marginal_likelihood: v,
                    });
                }
            }
            Ok(v) => last_err = Some(Error::Numerical(format!("candidate {index}: likelihood {v}"))),
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| {
        Error::Numerical(format!(
            "every candidate kernel failed; last error: {}",
            last_err.map_or_else(|| "none".into(), |e| e.to_string())
        ))
    })
}

fn lml(kernel: &KernelSpec, points: &[Vec<f64>], ys: &[f64], noise_variance: f64, prior_mean: f64) -> Result<f64> {
    let mut gp = GpPosterior::new(kernel.clone(), noise_variance)?.with_prior_mean(prior_mean)?;
    for (x, y) in points.iter().zip(ys) {
        gp.append(x.clone(), *y)?;
    }
    Ok(gp.log_marginal_likelihood())
}

/// Fits `player`'s kernel over `candidates` from `samples` random outcomes.
pub fn fit_hyperparameters(
    game: &dyn Game,
    player: usize,
    candidates: &[KernelSpec],
    samples: usize,
    seed: u64,
) -> Result<FitResult> {
    let prior = game
        .prior(player)
        .ok_or_else(|| Error::config("fit", format!("player {player} has no GP model to fit")))?;
    let (xs, ys) = sample_outcomes(game, player, samples, seed)?;
    let std = game.noise_std(player);
    select_kernel(candidates, &xs, &ys, (std * std).max(1e-12), prior.prior_mean)
}

/// Fits every learning agent's composite kernel over `grid` and installs
/// the winners in the game. Returns the per-agent results.
pub fn fit_routing_kernels(game: &mut RoutingGame, grid: &KernelGrid, offset: f64, base_seed: u64) -> Result<Vec<FitResult>> {
    use rayon::prelude::*;
    let shared: &RoutingGame = game;
    let results = (0..shared.num_players())
        .into_par_iter()
        .map(|p| {
            let m = shared.player_routes(p).edges.len();
            let candidates: Vec<KernelSpec> = grid.candidates(offset).iter().map(|c| c.spec(m)).collect();
            fit_hyperparameters(shared, p, &candidates, grid.samples, derive_seed(base_seed, &[FIT_STREAM, p as u64]))
        })
        .collect::<Result<Vec<_>>>()?;
    for (p, r) in results.iter().enumerate() {
        game.set_kernel(p, r.kernel.clone());
    }
    Ok(results)
}
