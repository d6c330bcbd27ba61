use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::log::{write_file, EpisodeLog};
use super::summary::{summarize, Summary};
use crate::error::{Error, Result};

pub const LOG_PREFIX: &str = "log_r";
pub const SERIES_PREFIX: &str = "series_";
pub const SUMMARY_FILE: &str = "summary.json";

pub fn log_file_name(repeat: usize) -> String {
    format!("{LOG_PREFIX}{repeat:03}.csv")
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    name: &'a str,
    seed: u64,
    horizon: usize,
    repeats: usize,
    finals: &'a std::collections::BTreeMap<String, super::summary::FinalStats>,
    environment: Vec<&'a serde_json::Value>,
}

/// Writes `round,mean,sd` files, one per tracked series.
pub fn write_series(dir: &Path, summary: &Summary) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (name, stats) in &summary.series {
        let path = dir.join(format!("{SERIES_PREFIX}{name}.csv"));
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["round", "mean", "sd"])?;
        for (t, (m, s)) in stats.mean.iter().zip(&stats.sd).enumerate() {
            w.write_record([(t + 1).to_string(), m.to_string(), s.to_string()])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::input(format!("csv buffer: {e}")))?;
        write_file(&path, &bytes)?;
        written.push(path);
    }
    Ok(written)
}

/// Writes per-repeat logs, strategy snapshots, plot series and the summary.
pub fn write_outputs(dir: &Path, name: &str, seed: u64, logs: &[EpisodeLog]) -> Result<Summary> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for log in logs {
        log.write_csv(&dir.join(log_file_name(log.repeat)))?;
        if !log.snapshots.is_empty() {
            write_file(
                &dir.join(format!("strategies_r{:03}.csv", log.repeat)),
                &log.snapshots_to_csv_bytes()?,
            )?;
        }
    }
    let summary = summarize(logs)?;
    write_series(dir, &summary)?;
    let file = SummaryFile {
        name,
        seed,
        horizon: summary.horizon,
        repeats: summary.repeats,
        finals: &summary.finals,
        environment: logs.iter().map(|l| &l.metadata).collect(),
    };
    let json = serde_json::to_vec_pretty(&file)?;
    write_file(&dir.join(SUMMARY_FILE), &json)?;
    Ok(summary)
}

/// Log files in `dir`, ordered by repeat index.
pub fn find_logs(dir: &Path) -> Result<Vec<(usize, PathBuf)>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut logs = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let Some(stem) = path.file_name().and_then(|n| n.to_str()) else { continue };
        if let Some(idx) = stem
            .strip_prefix(LOG_PREFIX)
            .and_then(|s| s.strip_suffix(".csv"))
            .and_then(|s| s.parse::<usize>().ok())
        {
            logs.push((idx, path));
        }
    }
    logs.sort();
    Ok(logs)
}

/// Regenerates the plot-series files of `dir` from its logs.
pub fn export(dir: &Path) -> Result<Vec<PathBuf>> {
    let found = find_logs(dir)?;
    if found.is_empty() {
        return Err(Error::input(format!("no {LOG_PREFIX}*.csv files in {}", dir.display())));
    }
    let logs = found
        .iter()
        .map(|(idx, path)| EpisodeLog::read_csv(path, *idx))
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(&logs)?;
    write_series(dir, &summary)
}
