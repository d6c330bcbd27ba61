use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::{MatrixSettings, RobustBoSettings, RoutingSettings};
use crate::learners::LearnerConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EnvironmentConfig {
    Matrix(MatrixSettings),
    Routing(RoutingSettings),
    RobustBo(RobustBoSettings),
}

impl EnvironmentConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            EnvironmentConfig::Matrix(_) => "matrix",
            EnvironmentConfig::Routing(_) => "routing",
            EnvironmentConfig::RobustBo(_) => "robust-bo",
        }
    }

    /// Whether every repeat plays a freshly sampled environment.
    pub fn per_repeat(&self) -> bool {
        matches!(self, EnvironmentConfig::Matrix(_))
    }

    fn input_files(&self) -> Vec<(&'static str, &Path)> {
        match self {
            EnvironmentConfig::Matrix(_) => Vec::new(),
            EnvironmentConfig::Routing(r) => vec![
                ("environment.network", r.network.as_path()),
                ("environment.trips", r.trips.as_path()),
            ],
            EnvironmentConfig::RobustBo(r) => {
                let mut v = Vec::new();
                if let Some(p) = &r.action_file {
                    v.push(("environment.action_file", p.as_path()));
                }
                if let Some(p) = &r.adversary_file {
                    v.push(("environment.adversary_file", p.as_path()));
                }
                v
            }
        }
    }
}

/// One `[[players]]` entry: a learner plus the role label its results are
/// grouped under (defaults to the variant name).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlayerConfig {
    #[serde(default)]
    pub role: Option<String>,
    #[serde(flatten)]
    pub learner: LearnerConfig,
}

impl PlayerConfig {
    pub fn role(&self) -> String {
        self.role
            .clone()
            .unwrap_or_else(|| self.learner.variant().name().to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub horizon: usize,
    #[serde(default = "one")]
    pub repeats: usize,
    /// Base seed; every random stream derives from it.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Strategy snapshot cadence in rounds; 0 disables snapshots.
    #[serde(default)]
    pub snapshot_every: usize,
    /// Output directory, relative to the working directory.
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub environment: EnvironmentConfig,
    /// Learner per player. A single entry applies to every player.
    pub players: Vec<PlayerConfig>,
}

fn one() -> usize {
    1
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl ExperimentConfig {
    /// Parses TOML text. Relative input paths resolve against `base_dir`.
    pub fn from_toml_str(text: &str, source: &Path, base_dir: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Parse {
            path: source.to_path_buf(),
            line: e.span().map_or(0, |s| line_of(text, s.start)),
            message: e.message().to_string(),
        })?;
        match &mut cfg.environment {
            EnvironmentConfig::Routing(r) => r.resolve_paths(base_dir),
            EnvironmentConfig::RobustBo(r) => r.resolve_paths(base_dir),
            EnvironmentConfig::Matrix(_) => {}
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, path, base)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty()
            || self
                .name
                .chars()
                .any(|c| !(c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.'))
        {
            return Err(Error::config("name", format!("`{}` is not a valid file-name stem", self.name)));
        }
        if self.horizon == 0 {
            return Err(Error::config("horizon", "horizon must be at least 1"));
        }
        if self.repeats == 0 {
            return Err(Error::config("repeats", "repeats must be at least 1"));
        }
        if self.players.is_empty() {
            return Err(Error::config("players", "at least one [[players]] entry is required"));
        }
        for (i, p) in self.players.iter().enumerate() {
            p.learner.validate().map_err(|e| match e {
                Error::Config { path, message } => Error::config(format!("players[{i}].{path}"), message),
                other => Error::config(format!("players[{i}]"), other.to_string()),
            })?;
        }
        match &self.environment {
            EnvironmentConfig::Matrix(m) => m.validate()?,
            EnvironmentConfig::Routing(r) => r.validate()?,
            EnvironmentConfig::RobustBo(r) => r.validate()?,
        }
        for (key, path) in self.environment.input_files() {
            if !path.is_file() {
                return Err(Error::config(key, format!("file `{}` does not exist", path.display())));
            }
        }
        Ok(())
    }

    /// Learner assignment for `num_players` players.
    pub fn assignment(&self, num_players: usize) -> Result<Vec<PlayerConfig>> {
        match self.players.len() {
            1 => Ok(vec![self.players[0].clone(); num_players]),
            n if n == num_players => Ok(self.players.clone()),
            n => Err(Error::config(
                "players",
                format!("{n} player entries for an environment with {num_players} players (use 1 to broadcast)"),
            )),
        }
    }

    /// Distinct roles in first-appearance order.
    pub fn roles(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        self.players
            .iter()
            .map(PlayerConfig::role)
            .filter(|r| seen.insert(r.clone()))
            .collect()
    }
}
