use crate::error::{Error, Result};

/// BPR coefficient and exponent used throughout.
pub const BPR_ALPHA: f64 = 0.15;
pub const BPR_POWER: i32 = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    /// Free-flow travel time `c_e`.
    pub free_flow_time: f64,
    /// Capacity `C_e`.
    pub capacity: f64,
}

/// Origin–destination demand; one routing agent per entry.
#[derive(Clone, Debug, PartialEq)]
pub struct Demand {
    pub origin: usize,
    pub destination: usize,
    pub units: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RoadNetwork {
    pub num_nodes: usize,
    pub edges: Vec<Edge>,
    pub demands: Vec<Demand>,
    out_edges: Vec<Vec<usize>>,
}

/// `t_e(x) = c_e (1 + 0.15 (x / C_e)^4)`.
pub fn bpr_travel_time(free_flow_time: f64, capacity: f64, load: f64) -> Result<f64> {
    if !(free_flow_time > 0.0 && capacity > 0.0) {
        return Err(Error::input(format!(
            "BPR parameters must be positive (c_e = {free_flow_time}, C_e = {capacity})"
        )));
    }
    if !(load >= 0.0) || !load.is_finite() {
        return Err(Error::input(format!("edge load must be nonnegative, got {load}")));
    }
    Ok(bpr_unchecked(free_flow_time, capacity, load))
}

#[inline]
pub(crate) fn bpr_unchecked(free_flow_time: f64, capacity: f64, load: f64) -> f64 {
    free_flow_time * (1.0 + BPR_ALPHA * (load / capacity).powi(BPR_POWER))
}

/// Average over all edges of `0.15 (x_e / C_e)^4`, where `x_e` is the total load.
pub fn congestion(network: &RoadNetwork, loads: &[f64]) -> Result<f64> {
    if loads.len() != network.edges.len() {
        return Err(Error::input(format!(
            "{} edge loads for {} edges",
            loads.len(),
            network.edges.len()
        )));
    }
    if network.edges.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = network
        .edges
        .iter()
        .zip(loads)
        .map(|(e, x)| BPR_ALPHA * (x / e.capacity).powi(BPR_POWER))
        .sum();
    Ok(total / network.edges.len() as f64)
}

impl RoadNetwork {
    pub fn new(num_nodes: usize, edges: Vec<Edge>, demands: Vec<Demand>) -> Result<Self> {
        let mut out_edges = vec![Vec::new(); num_nodes];
        for (i, e) in edges.iter().enumerate() {
            if e.from >= num_nodes || e.to >= num_nodes {
                return Err(Error::input(format!(
                    "edge {i} ({} -> {}) references a node outside 0..{num_nodes}",
                    e.from, e.to
                )));
            }
            if !(e.free_flow_time > 0.0 && e.free_flow_time.is_finite()) {
                return Err(Error::input(format!(
                    "edge {i} has non-positive free-flow time {}",
                    e.free_flow_time
                )));
            }
            if !(e.capacity > 0.0 && e.capacity.is_finite()) {
                return Err(Error::input(format!("edge {i} has non-positive capacity {}", e.capacity)));
            }
            out_edges[e.from].push(i);
        }
        for (i, d) in demands.iter().enumerate() {
            if d.origin >= num_nodes || d.destination >= num_nodes {
                return Err(Error::input(format!(
                    "demand {i} ({} -> {}) references a node outside 0..{num_nodes}",
                    d.origin, d.destination
                )));
            }
            if !(d.units > 0.0 && d.units.is_finite()) {
                return Err(Error::input(format!("demand {i} has non-positive units {}", d.units)));
            }
        }
        Ok(Self {
            num_nodes,
            edges,
            demands,
            out_edges,
        })
    }

    pub fn out_edges(&self, node: usize) -> &[usize] {
        &self.out_edges[node]
    }

    pub fn edge_travel_time(&self, edge: usize, load: f64) -> f64 {
        let e = &self.edges[edge];
        bpr_unchecked(e.free_flow_time, e.capacity, load)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bpr_values() {
        assert_eq!(bpr_travel_time(6.0, 10.0, 0.0).unwrap(), 6.0);
        assert_eq!(bpr_travel_time(6.0, 10.0, 10.0).unwrap(), 6.0 * 1.15);
        assert!((bpr_travel_time(6.0, 10.0, 20.0).unwrap() - 20.4).abs() < 1e-12);
        assert!(bpr_travel_time(6.0, 10.0, -1.0).is_err());
        assert!(bpr_travel_time(0.0, 10.0, 1.0).is_err());
    }

    #[test]
    fn congestion_at_capacity() {
        let net = RoadNetwork::new(
            2,
            vec![Edge { from: 0, to: 1, free_flow_time: 1.0, capacity: 4.0 }],
            vec![],
        )
        .unwrap();
        assert_eq!(congestion(&net, &[4.0]).unwrap(), 0.15);
        assert_eq!(congestion(&net, &[0.0]).unwrap(), 0.0);
    }
}
