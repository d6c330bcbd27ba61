//! Loopless k-shortest paths (Yen) in the free-flow travel-time metric.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::network::RoadNetwork;

#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    pub edges: Vec<usize>,
    pub cost: f64,
}

impl Path {
    pub fn nodes(&self, network: &RoadNetwork) -> Vec<usize> {
        let mut nodes = Vec::with_capacity(self.edges.len() + 1);
        if let Some(&first) = self.edges.first() {
            nodes.push(network.edges[first].from);
        }
        nodes.extend(self.edges.iter().map(|&e| network.edges[e].to));
        nodes
    }
}

fn path_cost(network: &RoadNetwork, edges: &[usize]) -> f64 {
    edges.iter().map(|&e| network.edges[e].free_flow_time).sum()
}

fn cmp_paths(a: &Path, b: &Path) -> Ordering {
    a.cost.total_cmp(&b.cost).then_with(|| a.edges.cmp(&b.edges))
}

#[derive(PartialEq)]
struct Entry {
    cost: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra from `source` to `target` avoiding banned edges and nodes.
pub fn shortest_path(
    network: &RoadNetwork,
    source: usize,
    target: usize,
    banned_edges: &[bool],
    banned_nodes: &[bool],
) -> Option<Path> {
    let n = network.num_nodes;
    let mut dist = vec![f64::INFINITY; n];
    let mut via: Vec<Option<usize>> = vec![None; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Entry { cost: 0.0, node: source });
    while let Some(Entry { cost, node }) = heap.pop() {
        if cost > dist[node] {
            continue;
        }
        if node == target {
            break;
        }
        for &e in network.out_edges(node) {
            let next = network.edges[e].to;
            if banned_edges[e] || banned_nodes[next] {
                continue;
            }
            let c = cost + network.edges[e].free_flow_time;
            if c < dist[next] {
                dist[next] = c;
                via[next] = Some(e);
                heap.push(Entry { cost: c, node: next });
            }
        }
    }
    if !dist[target].is_finite() {
        return None;
    }
    let mut edges = Vec::new();
    let mut node = target;
    while node != source {
        let e = via[node]?;
        edges.push(e);
        node = network.edges[e].from;
    }
    edges.reverse();
    let cost = path_cost(network, &edges);
    Some(Path { edges, cost })
}

/// Up to `k` loopless paths from `source` to `target` in increasing free-flow
/// cost; equal-cost paths are ordered by their edge-id sequence.
pub fn k_shortest_paths(network: &RoadNetwork, source: usize, target: usize, k: usize) -> Vec<Path> {
    let mut banned_edges = vec![false; network.edges.len()];
    let mut banned_nodes = vec![false; network.num_nodes];
    let Some(first) = shortest_path(network, source, target, &banned_edges, &banned_nodes) else {
        return Vec::new();
    };
    if source == target {
        return vec![first];
    }
    let mut accepted = vec![first];
    let mut candidates: Vec<Path> = Vec::new();
    while accepted.len() < k {
        let prev = accepted.last().expect("non-empty").clone();
        let prev_nodes = prev.nodes(network);
        for i in 0..prev.edges.len() {
            let spur_node = prev_nodes[i];
            let root = &prev.edges[..i];
            banned_edges.iter_mut().for_each(|b| *b = false);
            banned_nodes.iter_mut().for_each(|b| *b = false);
            for p in &accepted {
                if p.edges.len() > i && &p.edges[..i] == root {
                    banned_edges[p.edges[i]] = true;
                }
            }
            for &node in &prev_nodes[..i] {
                banned_nodes[node] = true;
            }
            if let Some(spur) = shortest_path(network, spur_node, target, &banned_edges, &banned_nodes) {
                let mut edges = root.to_vec();
                edges.extend(spur.edges);
                let cost = path_cost(network, &edges);
                let path = Path { edges, cost };
                if !candidates.contains(&path) && !accepted.contains(&path) {
                    candidates.push(path);
                }
            }
        }
        let Some(best) = candidates
            .iter()
            .enumerate()
            .min_by(|a, b| cmp_paths(a.1, b.1))
            .map(|(i, _)| i)
        else {
            break;
        };
        accepted.push(candidates.swap_remove(best));
    }
    accepted
}
