use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One player's view of one round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// 1-based round index.
    pub round: usize,
    pub agent: usize,
    pub role: String,
    pub action: usize,
    /// Noiseless reward on the learner's `[0, 1]` scale.
    pub true_reward: f64,
    /// What a reward measurement returned this round.
    pub noisy_reward: f64,
    /// Noiseless payoff in regret units (negative travel time for routing).
    pub payoff: f64,
    /// Cumulative regret `R(t)` in payoff units.
    pub regret: f64,
    pub congestion: Option<f64>,
}

/// Mixed strategy of one player at one round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategySnapshot {
    pub round: usize,
    pub agent: usize,
    pub weights: Vec<f64>,
}

/// Everything recorded during one repeat.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EpisodeLog {
    pub repeat: usize,
    pub horizon: usize,
    pub records: Vec<RoundRecord>,
    pub snapshots: Vec<StrategySnapshot>,
    pub metadata: serde_json::Value,
}

impl EpisodeLog {
    pub fn num_agents(&self) -> usize {
        self.records.iter().map(|r| r.agent + 1).max().unwrap_or(0)
    }

    /// Records of one agent in round order.
    pub fn agent_records(&self, agent: usize) -> impl Iterator<Item = &RoundRecord> {
        self.records.iter().filter(move |r| r.agent == agent)
    }

    /// Cumulative regret of `agent` after each round.
    pub fn cumulative_regret(&self, agent: usize) -> Vec<f64> {
        self.agent_records(agent).map(|r| r.regret).collect()
    }

    /// Per-round congestion, if the environment reports it.
    pub fn congestion(&self) -> Option<Vec<f64>> {
        self.agent_records(0).map(|r| r.congestion).collect()
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.records {
            w.serialize(r)?;
        }
        w.into_inner()
            .map_err(|e| Error::input(format!("csv buffer: {e}")))
    }

    pub fn records_from_csv(bytes: &[u8]) -> Result<Vec<RoundRecord>> {
        let mut r = csv::Reader::from_reader(bytes);
        let records = r.deserialize().collect::<Result<Vec<RoundRecord>, _>>()?;
        Ok(records)
    }

    pub fn snapshots_to_csv_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["round", "agent", "weights"])?;
        for s in &self.snapshots {
            let weights: Vec<String> = s.weights.iter().map(|x| x.to_string()).collect();
            w.write_record([s.round.to_string(), s.agent.to_string(), weights.join(" ")])?;
        }
        w.into_inner()
            .map_err(|e| Error::input(format!("csv buffer: {e}")))
    }

    /// Reads a log file written by [`EpisodeLog::write_csv`].
    pub fn read_csv(path: &Path, repeat: usize) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let records = Self::records_from_csv(&bytes).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: match &e {
                Error::Csv(c) => c.position().map_or(0, |p| p.line() as usize),
                _ => 0,
            },
            message: e.to_string(),
        })?;
        if records.is_empty() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 0,
                message: "log has no records".into(),
            });
        }
        let horizon = records.iter().map(|r| r.round).max().unwrap_or(0);
        let log = Self {
            repeat,
            horizon,
            records,
            snapshots: Vec::new(),
            metadata: serde_json::Value::Null,
        };
        log.check_shape().map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: e.to_string(),
        })?;
        Ok(log)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_csv_bytes()?)
    }

    /// Every agent has exactly one record per round `1..=horizon`.
    pub fn check_shape(&self) -> Result<()> {
        let n = self.num_agents();
        if self.records.len() != n * self.horizon {
            return Err(Error::input(format!(
                "{} records for {n} agents over {} rounds",
                self.records.len(),
                self.horizon
            )));
        }
        for (i, r) in self.records.iter().enumerate() {
            if r.round != i / n + 1 || r.agent != i % n {
                return Err(Error::input(format!(
                    "record {i} is (round {}, agent {}); expected round-major order",
                    r.round, r.agent
                )));
            }
        }
        Ok(())
    }
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EpisodeLog {
        let mut records = Vec::new();
        for round in 1..=3 {
            for agent in 0..2 {
                records.push(RoundRecord {
                    round,
                    agent,
                    role: if agent == 0 { "gp-mw".into() } else { "opponent".into() },
                    action: round % 2,
                    true_reward: 0.1 * round as f64 + 1.0 / 3.0,
                    noisy_reward: -0.123456789012345,
                    payoff: 1e-300,
                    regret: 0.0,
                    congestion: if agent == 0 { Some(0.15) } else { None },
                });
            }
        }
        EpisodeLog {
            repeat: 0,
            horizon: 3,
            records,
            snapshots: vec![],
            metadata: serde_json::Value::Null,
        }
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let log = sample();
        let bytes = log.to_csv_bytes().unwrap();
        let back = EpisodeLog::records_from_csv(&bytes).unwrap();
        assert_eq!(back, log.records);
        let again = EpisodeLog { records: back, ..log.clone() }.to_csv_bytes().unwrap();
        assert_eq!(bytes, again);
    }

    #[test]
    fn shape_check() {
        let mut log = sample();
        log.check_shape().unwrap();
        log.records.swap(0, 1);
        assert!(log.check_shape().is_err());
    }
}
