use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Game, GpPrior};
use crate::error::{Error, Result};
use crate::kernel_gp::{KernelSpec, Selector};
use crate::learners::OutcomeEncoder;
use crate::rng::{derive_seed, rng_from_seed};

const DATA_STREAM: u64 = 0xDA7A;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustBoSettings {
    /// Number of own actions (feature profiles `m_j`).
    #[serde(default = "default_movies")]
    pub actions: usize,
    /// Number of adversary profiles `u_i`.
    #[serde(default = "default_users")]
    pub adversaries: usize,
    /// Latent dimension `p`.
    #[serde(default = "default_features")]
    pub features: usize,
    /// Precomputed own-action feature table; synthetic when absent.
    #[serde(default)]
    pub action_file: Option<PathBuf>,
    #[serde(default)]
    pub adversary_file: Option<PathBuf>,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    #[serde(default = "default_noise")]
    pub noise_std: f64,
    /// Lengthscale of the linear factor of the suggested kernel.
    #[serde(default = "default_lengthscale")]
    pub lengthscale: f64,
}

fn default_movies() -> usize {
    200
}
fn default_users() -> usize {
    50
}
fn default_features() -> usize {
    15
}
fn default_delimiter() -> char {
    ','
}
fn default_noise() -> f64 {
    0.05
}
fn default_lengthscale() -> f64 {
    1.0
}

impl RobustBoSettings {
    pub fn validate(&self) -> Result<()> {
        if self.action_file.is_none() && (self.actions == 0 || self.features == 0) {
            return Err(Error::config("environment.actions", "need at least one action and one feature"));
        }
        if self.adversary_file.is_none() && self.adversaries == 0 {
            return Err(Error::config("environment.adversaries", "need at least one adversary profile"));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::config("environment.noise_std", "must be nonnegative"));
        }
        if !(self.lengthscale > 0.0 && self.lengthscale.is_finite()) {
            return Err(Error::config("environment.lengthscale", "must be positive"));
        }
        if !self.delimiter.is_ascii() {
            return Err(Error::config("environment.delimiter", "must be a single ASCII character"));
        }
        Ok(())
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [&mut self.action_file, &mut self.adversary_file].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

/// `n` profiles in `[0, 1]^p` with i.i.d. uniform entries, each row scaled
/// to unit Euclidean norm.
pub fn synthetic_profiles<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let mut row: Vec<f64> = (0..p).map(|_| rng.random::<f64>()).collect();
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|x| *x /= norm);
            }
            row
        })
        .collect()
}

/// Reads one profile per line of delimiter-separated reals.
pub fn load_feature_table(path: &Path, delimiter: char) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .delimiter(delimiter as u8)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::io(path, std::io::Error::other(e.to_string())),
            _ => Error::Csv(e),
        })?;
    let mut rows = Vec::new();
    let mut width = None;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let row = record
            .iter()
            .filter(|f| !f.is_empty())
            .map(|f| {
                f.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("invalid number `{f}`"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.is_empty() {
            continue;
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("expected {w} columns, found {}", row.len()),
                })
            }
            _ => {}
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: "no profiles found".into(),
        });
    }
    Ok(rows)
}

/// Player (own actions `m_j`) against an adversary choosing a profile index
/// `i`. Player 0 earns `f(m, i) = m·u_i` min-max rescaled to `[0, 1]` over the
/// whole table; player 1 earns `1 − f`.
#[derive(Clone, Debug)]
pub struct RobustBoGame {
    actions: Vec<Vec<f64>>,
    adversaries: Vec<Vec<f64>>,
    table: Vec<f64>,
    noise_std: f64,
    lengthscale: f64,
    transform: (f64, f64),
}

impl RobustBoGame {
    pub fn new(actions: Vec<Vec<f64>>, adversaries: Vec<Vec<f64>>, noise_std: f64) -> Result<Self> {
        let p = actions.first().map_or(0, Vec::len);
        if actions.is_empty() || adversaries.is_empty() || p == 0 {
            return Err(Error::input("robust BO needs non-empty action and adversary profiles"));
        }
        if actions.iter().chain(&adversaries).any(|r| r.len() != p) {
            return Err(Error::input(format!("all profiles must have dimension {p}")));
        }
        let raw: Vec<f64> = actions
            .iter()
            .flat_map(|m| adversaries.iter().map(move |u| dot(m, u)))
            .collect();
        let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let spread = hi - lo;
        let table = if spread < super::matrix::DEGENERATE_SPREAD {
            vec![0.5; raw.len()]
        } else {
            raw.iter().map(|x| (x - lo) / spread).collect()
        };
        Ok(Self {
            actions,
            adversaries,
            table,
            noise_std,
            lengthscale: 1.0,
            transform: (lo, spread),
        })
    }

    pub fn from_settings(settings: &RobustBoSettings, seed: u64) -> Result<Self> {
        settings.validate()?;
        let mut rng = rng_from_seed(derive_seed(seed, &[DATA_STREAM]));
        let actions = match &settings.action_file {
            Some(path) => load_feature_table(path, settings.delimiter)?,
            None => synthetic_profiles(settings.actions, settings.features, &mut rng),
        };
        let p = actions[0].len();
        let adversaries = match &settings.adversary_file {
            Some(path) => load_feature_table(path, settings.delimiter)?,
            None => synthetic_profiles(settings.adversaries, p, &mut rng),
        };
        let mut game = Self::new(actions, adversaries, settings.noise_std)?;
        game.lengthscale = settings.lengthscale;
        Ok(game)
    }

    pub fn num_own_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn num_adversaries(&self) -> usize {
        self.adversaries.len()
    }

    /// Rescaled reward `f(m_j, i)`.
    pub fn value(&self, action: usize, adversary: usize) -> f64 {
        self.table[action * self.adversaries.len() + adversary]
    }

    /// Raw inner product `m_j · u_i`.
    pub fn raw_value(&self, action: usize, adversary: usize) -> f64 {
        dot(&self.actions[action], &self.adversaries[adversary])
    }

    /// One round: noisy player reward and the revealed adversary index.
    pub fn round<R: Rng + ?Sized>(&self, action: usize, adversary: usize, rng: &mut R) -> Result<(f64, usize)> {
        if action >= self.actions.len() || adversary >= self.adversaries.len() {
            return Err(Error::input(format!(
                "indices ({action}, {adversary}) outside {} x {}",
                self.actions.len(),
                self.adversaries.len()
            )));
        }
        let noise = if self.noise_std > 0.0 {
            Normal::new(0.0, self.noise_std)
                .map_err(|e| Error::input(e.to_string()))?
                .sample(rng)
        } else {
            0.0
        };
        Ok((self.value(action, adversary) + noise, adversary))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `[m_j, 1, i]`: the constant feature lets a linear kernel represent the
/// affine rescaling of `m·u_i`.
struct ProfileEncoder {
    features: Vec<Vec<f64>>,
}

impl OutcomeEncoder for ProfileEncoder {
    fn num_actions(&self) -> usize {
        self.features.len()
    }

    fn encode(&self, action: usize, context: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.features[action].len() + 2);
        out.extend_from_slice(&self.features[action]);
        out.push(1.0);
        out.extend_from_slice(context);
        out
    }
}

impl Game for RobustBoGame {
    fn num_players(&self) -> usize {
        2
    }

    fn num_actions(&self, player: usize) -> usize {
        if player == 0 {
            self.actions.len()
        } else {
            self.adversaries.len()
        }
    }

    fn contexts(&self, joint: &[usize]) -> Vec<Vec<f64>> {
        vec![vec![joint[1] as f64], vec![joint[0] as f64]]
    }

    fn payoff(&self, player: usize, action: usize, context: &[f64]) -> f64 {
        let other = context[0] as usize;
        if player == 0 {
            self.value(action, other)
        } else {
            1.0 - self.value(other, action)
        }
    }

    fn reward(&self, player: usize, action: usize, context: &[f64]) -> f64 {
        self.payoff(player, action, context)
    }

    fn noise_std(&self, _player: usize) -> f64 {
        self.noise_std
    }

    /// Linear kernel on `[m, 1]` times a diagonal kernel on the adversary
    /// index; only the player has a suggested model.
    fn prior(&self, player: usize) -> Option<GpPrior> {
        if player != 0 {
            return None;
        }
        let p = self.actions[0].len();
        let kernel = KernelSpec::product(vec![
            (KernelSpec::Diagonal, Selector::Range { start: p + 1, end: p + 2 }),
            (KernelSpec::linear(self.lengthscale), Selector::Range { start: 0, end: p + 1 }),
        ]);
        Some(GpPrior {
            encoder: Arc::new(ProfileEncoder {
                features: self.actions.clone(),
            }),
            kernel,
            prior_mean: 0.0,
        })
    }

    fn adversary_contexts(&self, player: usize) -> Option<Vec<Vec<f64>>> {
        (player == 0).then(|| (0..self.adversaries.len()).map(|i| vec![i as f64]).collect())
    }

    fn metadata(&self) -> serde_json::Value {
        serde_json::json!({
            "actions": self.actions.len(),
            "adversaries": self.adversaries.len(),
            "features": self.actions[0].len(),
            "rescale": { "min": self.transform.0, "range": self.transform.1 },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_rows_unit_norm() {
        let mut rng = rng_from_seed(3);
        for row in synthetic_profiles(10, 15, &mut rng) {
            assert!((row.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|x| *x >= 0.0));
        }
    }

    #[test]
    fn zero_noise_round_is_table_entry() {
        let g = RobustBoGame::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![vec![0.2, 0.8]], 0.0).unwrap();
        let mut rng = rng_from_seed(1);
        assert_eq!(g.round(1, 0, &mut rng).unwrap(), (1.0, 0));
        assert_eq!(g.round(0, 0, &mut rng).unwrap(), (0.0, 0));
        assert!(g.round(2, 0, &mut rng).is_err());
    }

    #[test]
    fn adversary_payoff_complements() {
        let g = RobustBoGame::new(vec![vec![1.0], vec![2.0], vec![4.0]], vec![vec![1.0]], 0.0).unwrap();
        let ctx = g.contexts(&[1, 0]);
        assert!((g.payoff(0, 1, &ctx[0]) - 1.0 / 3.0).abs() < 1e-15);
        assert!((g.payoff(1, 0, &ctx[1]) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn loads_feature_table() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        std::fs::write(&path, "0.1, 0.2\n0.3,0.4\n").unwrap();
        assert_eq!(load_feature_table(&path, ',').unwrap(), vec![vec![0.1, 0.2], vec![0.3, 0.4]]);
        std::fs::write(&path, "0.1,0.2\n0.3,x\n").unwrap();
        let err = load_feature_table(&path, ',').unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }
}
