//! Readers for TNTP network (`*_net.tntp`) and trip (`*_trips.tntp`) files.
//!
//! Network files start with `<KEY> value` metadata lines closed by
//! `<END OF METADATA>`, may contain `~` comment lines, and then list one edge
//! per line: `init_node term_node capacity length free_flow_time ... ;`.
//! Trip files contain `Origin o` headers followed by `d : flow;` pairs.
//! Node ids are 1-based in the files and 0-based in memory.

use std::fs;
use std::path::Path;

use super::network::{Demand, Edge, RoadNetwork};
use crate::error::{Error, Result};

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Strips metadata (`<...>`), comments (`~...`) and blank lines, yielding
/// 1-based line numbers with their trimmed content.
fn body_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut in_metadata = text.lines().any(|l| l.trim() == "<END OF METADATA>");
    text.lines().enumerate().filter_map(move |(i, raw)| {
        let line = raw.trim();
        if in_metadata {
            if line == "<END OF METADATA>" {
                in_metadata = false;
            }
            return None;
        }
        if line.is_empty() || line.starts_with('~') || line.starts_with('<') {
            return None;
        }
        Some((i + 1, line))
    })
}

fn node_id(token: &str, path: &Path, line: usize) -> Result<usize> {
    match token.parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n - 1),
        _ => Err(parse_err(path, line, format!("invalid node id `{token}`"))),
    }
}

fn number(token: &str, what: &str, path: &Path, line: usize) -> Result<f64> {
    token
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| parse_err(path, line, format!("invalid {what} `{token}`")))
}

/// Parses network edges from text; `path` is used for diagnostics only.
pub fn parse_network_edges(text: &str, path: &Path) -> Result<(usize, Vec<Edge>)> {
    let mut edges = Vec::new();
    let mut max_node = 0;
    for (line, content) in body_lines(text) {
        let content = content.trim_end_matches(';');
        let cols: Vec<&str> = content.split_whitespace().collect();
        if cols.len() < 5 {
            return Err(parse_err(
                path,
                line,
                format!("edge line needs at least 5 columns, found {}", cols.len()),
            ));
        }
        let from = node_id(cols[0], path, line)?;
        let to = node_id(cols[1], path, line)?;
        let capacity = number(cols[2], "capacity", path, line)?;
        let free_flow_time = number(cols[4], "free-flow time", path, line)?;
        if capacity <= 0.0 {
            return Err(parse_err(path, line, format!("capacity must be positive, got {capacity}")));
        }
        if free_flow_time <= 0.0 {
            return Err(parse_err(
                path,
                line,
                format!("free-flow time must be positive, got {free_flow_time}"),
            ));
        }
        max_node = max_node.max(from + 1).max(to + 1);
        edges.push(Edge {
            from,
            to,
            free_flow_time,
            capacity,
        });
    }
    if edges.is_empty() {
        return Err(parse_err(path, 0, "no edge records found"));
    }
    Ok((max_node, edges))
}

/// Parses origin–destination demands, skipping zero flows and self-pairs.
pub fn parse_trips(text: &str, path: &Path) -> Result<Vec<Demand>> {
    let mut demands = Vec::new();
    let mut origin: Option<usize> = None;
    for (line, content) in body_lines(text) {
        if let Some(rest) = content.strip_prefix("Origin") {
            origin = Some(node_id(rest.trim(), path, line)?);
            continue;
        }
        let o = origin.ok_or_else(|| parse_err(path, line, "destination entries before any `Origin` line"))?;
        for pair in content.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (dest, flow) = pair
                .split_once(':')
                .ok_or_else(|| parse_err(path, line, format!("expected `destination : flow`, got `{pair}`")))?;
            let d = node_id(dest.trim(), path, line)?;
            let units = number(flow.trim(), "flow", path, line)?;
            if units < 0.0 {
                return Err(parse_err(path, line, format!("negative flow {units}")));
            }
            if units > 0.0 && d != o {
                demands.push(Demand {
                    origin: o,
                    destination: d,
                    units,
                });
            }
        }
    }
    Ok(demands)
}

/// Loads a network file and a trips file into a validated [`RoadNetwork`].
pub fn load_network(net_path: &Path, trips_path: &Path) -> Result<RoadNetwork> {
    let (mut nodes, edges) = parse_network_edges(&read(net_path)?, net_path)?;
    let demands = parse_trips(&read(trips_path)?, trips_path)?;
    for d in &demands {
        nodes = nodes.max(d.origin + 1).max(d.destination + 1);
    }
    RoadNetwork::new(nodes, edges, demands)
}
