use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ledger::time_average;
use super::log::EpisodeLog;
use crate::error::{Error, Result};

/// Cross-repeat mean and (population) standard deviation per round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesStats {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinalStats {
    pub mean: f64,
    pub sd: f64,
    pub per_repeat: Vec<f64>,
}

/// Tracked series are `regret_<role>` (time-averaged regret averaged over
/// the agents holding that role) and, for routing, `congestion`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub repeats: usize,
    pub horizon: usize,
    pub series: BTreeMap<String, SeriesStats>,
    pub finals: BTreeMap<String, FinalStats>,
}

impl Summary {
    pub fn final_mean(&self, series: &str) -> Option<f64> {
        self.finals.get(series).map(|f| f.mean)
    }

    /// Cross-repeat mean of a series at 1-based round `t`.
    pub fn mean_at(&self, series: &str, t: usize) -> Option<f64> {
        self.series.get(series).and_then(|s| s.mean.get(t.checked_sub(1)?)).copied()
    }
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.max(0.0).sqrt())
}

/// Per-repeat series of one log.
pub fn episode_series(log: &EpisodeLog) -> BTreeMap<String, Vec<f64>> {
    let mut by_role: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
    for agent in 0..log.num_agents() {
        let role = log
            .agent_records(agent)
            .next()
            .map(|r| r.role.clone())
            .unwrap_or_default();
        by_role
            .entry(role)
            .or_default()
            .push(time_average(&log.cumulative_regret(agent)));
    }
    let mut out = BTreeMap::new();
    for (role, agents) in by_role {
        let t = agents[0].len();
        let avg = (0..t)
            .map(|i| agents.iter().map(|a| a[i]).sum::<f64>() / agents.len() as f64)
            .collect();
        out.insert(format!("regret_{role}"), avg);
    }
    if let Some(c) = log.congestion() {
        out.insert("congestion".into(), c);
    }
    out
}

pub fn summarize(logs: &[EpisodeLog]) -> Result<Summary> {
    let first = logs.first().ok_or_else(|| Error::input("no logs to summarize"))?;
    let per_repeat: Vec<BTreeMap<String, Vec<f64>>> = logs.iter().map(episode_series).collect();
    let keys: Vec<String> = per_repeat[0].keys().cloned().collect();
    for (i, (log, s)) in logs.iter().zip(&per_repeat).enumerate() {
        if log.horizon != first.horizon || log.num_agents() != first.num_agents() {
            return Err(Error::input(format!(
                "log {i} has shape ({} rounds, {} agents), expected ({}, {})",
                log.horizon,
                log.num_agents(),
                first.horizon,
                first.num_agents()
            )));
        }
        if s.keys().ne(keys.iter()) {
            return Err(Error::input(format!("log {i} tracks different roles or series")));
        }
    }
    let mut series = BTreeMap::new();
    let mut finals = BTreeMap::new();
    for key in keys {
        let runs: Vec<&Vec<f64>> = per_repeat.iter().map(|s| &s[&key]).collect();
        let t = runs[0].len();
        let (mean, sd): (Vec<f64>, Vec<f64>) = (0..t)
            .map(|i| mean_sd(&runs.iter().map(|r| r[i]).collect::<Vec<_>>()))
            .unzip();
        let last: Vec<f64> = runs.iter().map(|r| *r.last().unwrap_or(&0.0)).collect();
        let (m, s) = mean_sd(&last);
        finals.insert(key.clone(), FinalStats { mean: m, sd: s, per_repeat: last });
        series.insert(key, SeriesStats { mean, sd });
    }
    Ok(Summary {
        repeats: logs.len(),
        horizon: first.horizon,
        series,
        finals,
    })
}
