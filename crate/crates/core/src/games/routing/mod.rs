//! Atomic traffic routing on a road network with BPR edge latencies.
//!
//! Each origin–destination demand is an agent that sends its `u^i` units
//! along one of up to five loopless shortest routes. A subset of agents
//! learns; the rest stay on their free-flow shortest route.

mod network;
mod paths;
mod tntp;

use std::path::{Path as FsPath, PathBuf};
use std::sync::Arc;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use network::{bpr_travel_time, congestion, Demand, Edge, RoadNetwork, BPR_ALPHA, BPR_POWER};
pub use paths::{k_shortest_paths, shortest_path, Path};
pub use tntp::{load_network, parse_network_edges, parse_trips};

use super::{Game, GpPrior};
use crate::error::{Error, Result};
use crate::kernel_gp::{KernelSpec, Selector};
use crate::learners::OutcomeEncoder;
use crate::rng::rng_from_seed;

// Stream tags for seeds derived from the experiment seed.
const SUBSET_STREAM: u64 = 0x5AB5E7;
const BOUND_STREAM: u64 = 0xB0B0;

/// Route set of one agent.
///
/// `edges` is `E(i)`, the sorted union of edges over all of the agent's
/// routes; profiles and occupancies are vectors indexed like `edges`.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentRoutes {
    pub demand: usize,
    pub origin: usize,
    pub destination: usize,
    pub units: f64,
    pub edges: Vec<usize>,
    /// Each route as positions into `edges`.
    pub routes: Vec<Vec<usize>>,
    /// Free-flow travel time of each route.
    pub free_flow: Vec<f64>,
}

impl AgentRoutes {
    pub fn num_routes(&self) -> usize {
        self.routes.len()
    }

    /// Incidence profile `a^i` over `E(i)`: `u^i` on route edges, else 0.
    pub fn profile(&self, route: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.edges.len()];
        for &pos in &self.routes[route] {
            p[pos] = self.units;
        }
        p
    }

    /// Global edge ids of a route, in travel order.
    pub fn route_edges(&self, route: usize) -> impl Iterator<Item = usize> + '_ {
        self.routes[route].iter().map(|&pos| self.edges[pos])
    }

    /// `l^i = Σ_e [a^i]_e t_e([a^i]_e + ψ_e)` for one of this agent's routes.
    pub fn travel_time(&self, network: &RoadNetwork, route: usize, psi: &[f64]) -> f64 {
        self.routes[route]
            .iter()
            .map(|&pos| self.units * network.edge_travel_time(self.edges[pos], self.units + psi[pos]))
            .sum()
    }
}

/// Up to `k` loopless shortest routes of a demand, dropping any route whose
/// free-flow time exceeds `prune_ratio` times the shortest.
pub fn enumerate_routes(network: &RoadNetwork, demand: usize, k: usize, prune_ratio: f64) -> Result<AgentRoutes> {
    let d = network
        .demands
        .get(demand)
        .ok_or_else(|| Error::input(format!("no demand with index {demand}")))?;
    let mut paths = k_shortest_paths(network, d.origin, d.destination, k);
    if paths.is_empty() || d.origin == d.destination {
        return Err(Error::config(
            "environment.trips",
            format!(
                "destination {} is unreachable from origin {}",
                d.destination + 1,
                d.origin + 1
            ),
        ));
    }
    let limit = prune_ratio * paths[0].cost;
    paths.retain(|p| p.cost <= limit);
    let mut edges: Vec<usize> = paths.iter().flat_map(|p| p.edges.iter().copied()).collect();
    edges.sort_unstable();
    edges.dedup();
    let routes = paths
        .iter()
        .map(|p| {
            p.edges
                .iter()
                .map(|e| edges.binary_search(e).expect("edge in union"))
                .collect()
        })
        .collect();
    Ok(AgentRoutes {
        demand,
        origin: d.origin,
        destination: d.destination,
        units: d.units,
        edges,
        routes,
        free_flow: paths.iter().map(|p| p.cost).collect(),
    })
}

/// Total load on every network edge when agent `j` drives route `choices[j]`.
pub fn edge_loads(num_edges: usize, agents: &[AgentRoutes], choices: &[usize]) -> Vec<f64> {
    let mut loads = vec![0.0; num_edges];
    for (agent, &route) in agents.iter().zip(choices) {
        for e in agent.route_edges(route) {
            loads[e] += agent.units;
        }
    }
    loads
}

/// `ψ(a^{-i})` on `E(i)`: the load all agents other than `agent` put on each
/// of its edges.
pub fn occupancy(agents: &[AgentRoutes], choices: &[usize], agent: usize) -> Vec<f64> {
    let own = &agents[agent];
    let mut psi = vec![0.0; own.edges.len()];
    for (j, (other, &route)) in agents.iter().zip(choices).enumerate() {
        if j == agent {
            continue;
        }
        for e in other.route_edges(route) {
            if let Ok(pos) = own.edges.binary_search(&e) {
                psi[pos] += other.units;
            }
        }
    }
    psi
}

/// Travel time of profile `a` over the edge list `edges` given occupancy `ψ`.
pub fn agent_travel_time(network: &RoadNetwork, edges: &[usize], profile: &[f64], psi: &[f64]) -> Result<f64> {
    if profile.len() != edges.len() || psi.len() != edges.len() {
        return Err(Error::input(format!(
            "profile ({}) and occupancy ({}) must match the {} agent edges",
            profile.len(),
            psi.len(),
            edges.len()
        )));
    }
    let mut total = 0.0;
    for ((&e, &a), &p) in edges.iter().zip(profile).zip(psi) {
        if a < 0.0 || p < 0.0 {
            return Err(Error::input("profiles and occupancies must be nonnegative"));
        }
        if a > 0.0 {
            total += a * network.edge_travel_time(e, a + p);
        }
    }
    Ok(total)
}

/// Per-agent travel-time upper bounds: the maximum travel time of each agent
/// over `samples` joint outcomes in which every listed agent picks a route
/// uniformly at random, on top of the fixed `background` edge loads.
pub fn scale_rewards(
    network: &RoadNetwork,
    agents: &[AgentRoutes],
    background: &[f64],
    samples: usize,
    seed: u64,
) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    let mut bounds = vec![0.0f64; agents.len()];
    let mut choices = vec![0; agents.len()];
    for _ in 0..samples {
        for (c, a) in choices.iter_mut().zip(agents) {
            *c = rng.random_range(0..a.num_routes());
        }
        let mut loads = edge_loads(network.edges.len(), agents, &choices);
        for (l, b) in loads.iter_mut().zip(background) {
            *l += b;
        }
        for ((bound, agent), &route) in bounds.iter_mut().zip(agents).zip(&choices) {
            let t: f64 = agent
                .route_edges(route)
                .map(|e| agent.units * network.edge_travel_time(e, loads[e]))
                .sum();
            *bound = bound.max(t);
        }
    }
    bounds
}

/// Hyperparameters of the composite routing kernel
/// `k((a, ψ), (a′, ψ′)) = lin(a, a′) · poly(a + ψ, a′ + ψ′)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoutingKernel {
    #[serde(default = "one")]
    pub linear_lengthscale: f64,
    #[serde(default = "ten")]
    pub poly_lengthscale: f64,
    #[serde(default = "four")]
    pub degree: u32,
    #[serde(default = "one")]
    pub offset: f64,
}

fn one() -> f64 {
    1.0
}
fn ten() -> f64 {
    10.0
}
fn four() -> u32 {
    4
}

impl Default for RoutingKernel {
    fn default() -> Self {
        Self {
            linear_lengthscale: 1.0,
            poly_lengthscale: 10.0,
            degree: 4,
            offset: 1.0,
        }
    }
}

impl RoutingKernel {
    /// Kernel over `[a (m coords), ψ (m coords)]`.
    pub fn spec(&self, m: usize) -> KernelSpec {
        KernelSpec::product(vec![
            (
                KernelSpec::linear(self.linear_lengthscale),
                Selector::Range { start: 0, end: m },
            ),
            (
                KernelSpec::polynomial(self.poly_lengthscale, self.degree, self.offset),
                Selector::SumOfRanges {
                    first_start: 0,
                    second_start: m,
                    len: m,
                },
            ),
        ])
    }
}

/// Candidate grid for offline marginal-likelihood fitting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelGrid {
    #[serde(default = "default_fit_samples")]
    pub samples: usize,
    #[serde(default = "default_degrees")]
    pub degrees: Vec<u32>,
    #[serde(default = "default_linear_grid")]
    pub linear_lengthscales: Vec<f64>,
    #[serde(default = "default_poly_grid")]
    pub poly_lengthscales: Vec<f64>,
}

fn default_fit_samples() -> usize {
    200
}
fn default_degrees() -> Vec<u32> {
    vec![2, 4, 6]
}
fn default_linear_grid() -> Vec<f64> {
    vec![0.1, 1.0, 10.0, 100.0]
}
fn default_poly_grid() -> Vec<f64> {
    vec![1.0, 10.0, 100.0]
}

impl Default for KernelGrid {
    fn default() -> Self {
        Self {
            samples: default_fit_samples(),
            degrees: default_degrees(),
            linear_lengthscales: default_linear_grid(),
            poly_lengthscales: default_poly_grid(),
        }
    }
}

impl KernelGrid {
    pub fn candidates(&self, offset: f64) -> Vec<RoutingKernel> {
        let mut out = Vec::new();
        for &degree in &self.degrees {
            for &l1 in &self.linear_lengthscales {
                for &l2 in &self.poly_lengthscales {
                    out.push(RoutingKernel {
                        linear_lengthscale: l1,
                        poly_lengthscale: l2,
                        degree,
                        offset,
                    });
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoutingSettings {
    pub network: PathBuf,
    pub trips: PathBuf,
    /// Number of learning agents; the rest drive their shortest route.
    /// Omitted means every agent learns.
    #[serde(default)]
    pub learners: Option<usize>,
    #[serde(default = "default_routes")]
    pub routes_per_agent: usize,
    #[serde(default = "default_prune")]
    pub prune_ratio: f64,
    #[serde(default = "default_bound_samples")]
    pub bound_samples: usize,
    /// Noise standard deviation as a fraction of each agent's travel-time bound.
    #[serde(default = "default_noise_fraction")]
    pub noise_fraction: f64,
    /// Divide GP inputs by edge capacity.
    #[serde(default = "default_true")]
    pub normalize: bool,
    #[serde(default)]
    pub kernel: RoutingKernel,
    /// Fit the kernel per learning agent before play.
    #[serde(default)]
    pub fit: Option<KernelGrid>,
}

fn default_routes() -> usize {
    5
}
fn default_prune() -> f64 {
    3.0
}
fn default_bound_samples() -> usize {
    10_000
}
fn default_noise_fraction() -> f64 {
    0.001
}
fn default_true() -> bool {
    true
}

impl RoutingSettings {
    pub fn validate(&self) -> Result<()> {
        if self.routes_per_agent == 0 {
            return Err(Error::config("environment.routes_per_agent", "must be at least 1"));
        }
        if !(self.prune_ratio >= 1.0) {
            return Err(Error::config("environment.prune_ratio", "must be at least 1"));
        }
        if self.bound_samples == 0 {
            return Err(Error::config("environment.bound_samples", "must be at least 1"));
        }
        if !(self.noise_fraction >= 0.0 && self.noise_fraction.is_finite()) {
            return Err(Error::config("environment.noise_fraction", "must be nonnegative"));
        }
        self.kernel
            .spec(1)
            .validate()
            .map_err(|e| Error::config("environment.kernel", e.to_string()))?;
        if let Some(grid) = &self.fit {
            if grid.samples == 0 || grid.degrees.is_empty() || grid.linear_lengthscales.is_empty() || grid.poly_lengthscales.is_empty() {
                return Err(Error::config("environment.fit", "candidate grid and sample count must be non-empty"));
            }
            if let Some(d) = grid.degrees.iter().find(|d| ![2, 4, 6].contains(*d)) {
                return Err(Error::config("environment.fit.degrees", format!("degree {d} not in {{2, 4, 6}}")));
            }
        }
        Ok(())
    }

    pub fn resolve_paths(&mut self, base: &FsPath) {
        if self.network.is_relative() {
            self.network = base.join(&self.network);
        }
        if self.trips.is_relative() {
            self.trips = base.join(&self.trips);
        }
    }
}

/// Encodes `(route, ψ)` as `[a^i, ψ]`, optionally divided by edge capacity.
struct RouteEncoder {
    profiles: Vec<Vec<f64>>,
    scale: Vec<f64>,
}

impl OutcomeEncoder for RouteEncoder {
    fn num_actions(&self) -> usize {
        self.profiles.len()
    }

    fn encode(&self, action: usize, context: &[f64]) -> Vec<f64> {
        let p = &self.profiles[action];
        let mut out = Vec::with_capacity(2 * p.len());
        out.extend(p.iter().zip(&self.scale).map(|(a, s)| a * s));
        out.extend(context.iter().zip(&self.scale).map(|(x, s)| x * s));
        out
    }
}

/// Routing game among the learning agents; non-learners contribute a fixed
/// background load.
#[derive(Clone, Debug)]
pub struct RoutingGame {
    network: Arc<RoadNetwork>,
    all_routes: Arc<Vec<AgentRoutes>>,
    learners: Vec<usize>,
    background: Vec<f64>,
    bounds: Vec<f64>,
    noise_fraction: f64,
    normalize: bool,
    kernels: Vec<KernelSpec>,
}

impl RoutingGame {
    /// Loads the network, enumerates routes for every demand, picks the
    /// learning subset and estimates reward bounds, all from `seed`.
    pub fn build(settings: &RoutingSettings, seed: u64) -> Result<Self> {
        settings.validate()?;
        let network = load_network(&settings.network, &settings.trips)?;
        let routes = (0..network.demands.len())
            .map(|d| enumerate_routes(&network, d, settings.routes_per_agent, settings.prune_ratio))
            .collect::<Result<Vec<_>>>()?;
        let n = routes.len();
        let learners = match settings.learners {
            None => (0..n).collect(),
            Some(m) if m > n => {
                return Err(Error::config(
                    "environment.learners",
                    format!("{m} learning agents requested but the network has {n} agents"),
                ))
            }
            Some(m) => {
                let mut rng = rng_from_seed(crate::rng::derive_seed(seed, &[SUBSET_STREAM]));
                let mut picked = sample(&mut rng, n, m).into_vec();
                picked.sort_unstable();
                picked
            }
        };
        Self::from_parts(network, routes, learners, settings, seed)
    }

    pub fn from_parts(
        network: RoadNetwork,
        all_routes: Vec<AgentRoutes>,
        learners: Vec<usize>,
        settings: &RoutingSettings,
        seed: u64,
    ) -> Result<Self> {
        let mut is_learner = vec![false; all_routes.len()];
        for &l in &learners {
            *is_learner
                .get_mut(l)
                .ok_or_else(|| Error::input(format!("learner index {l} out of range")))? = true;
        }
        let mut background = vec![0.0; network.edges.len()];
        for (agent, _) in all_routes.iter().zip(&is_learner).filter(|(_, l)| !**l) {
            for e in agent.route_edges(0) {
                background[e] += agent.units;
            }
        }
        let players: Vec<AgentRoutes> = learners.iter().map(|&l| all_routes[l].clone()).collect();
        let bounds = scale_rewards(
            &network,
            &players,
            &background,
            settings.bound_samples,
            crate::rng::derive_seed(seed, &[BOUND_STREAM]),
        );
        let kernels = players
            .iter()
            .map(|a| settings.kernel.spec(a.edges.len()))
            .collect();
        Ok(Self {
            network: Arc::new(network),
            all_routes: Arc::new(all_routes),
            learners,
            background,
            bounds,
            noise_fraction: settings.noise_fraction,
            normalize: settings.normalize,
            kernels,
        })
    }

    pub fn network(&self) -> &RoadNetwork {
        &self.network
    }

    /// Route sets of every agent in the network, learners or not.
    pub fn all_routes(&self) -> &[AgentRoutes] {
        &self.all_routes
    }

    /// Network agent index of each player.
    pub fn learners(&self) -> &[usize] {
        &self.learners
    }

    pub fn player_routes(&self, player: usize) -> &AgentRoutes {
        &self.all_routes[self.learners[player]]
    }

    pub fn background(&self) -> &[f64] {
        &self.background
    }

    pub fn bounds(&self) -> &[f64] {
        &self.bounds
    }

    pub fn kernel(&self, player: usize) -> &KernelSpec {
        &self.kernels[player]
    }

    pub fn set_kernel(&mut self, player: usize, kernel: KernelSpec) {
        self.kernels[player] = kernel;
    }

    /// Total edge loads (learners plus background) for a joint action.
    pub fn total_loads(&self, joint: &[usize]) -> Vec<f64> {
        let mut loads = self.background.clone();
        for (p, &route) in joint.iter().enumerate() {
            let agent = self.player_routes(p);
            for e in agent.route_edges(route) {
                loads[e] += agent.units;
            }
        }
        loads
    }

    pub fn travel_time(&self, player: usize, route: usize, psi: &[f64]) -> f64 {
        self.player_routes(player).travel_time(&self.network, route, psi)
    }
}

impl Game for RoutingGame {
    fn num_players(&self) -> usize {
        self.learners.len()
    }

    fn num_actions(&self, player: usize) -> usize {
        self.player_routes(player).num_routes()
    }

    fn contexts(&self, joint: &[usize]) -> Vec<Vec<f64>> {
        let loads = self.total_loads(joint);
        joint
            .iter()
            .enumerate()
            .map(|(p, &route)| {
                let agent = self.player_routes(p);
                let mut psi: Vec<f64> = agent.edges.iter().map(|&e| loads[e]).collect();
                for &pos in &agent.routes[route] {
                    psi[pos] = (psi[pos] - agent.units).max(0.0);
                }
                psi
            })
            .collect()
    }

    fn payoff(&self, player: usize, action: usize, context: &[f64]) -> f64 {
        -self.travel_time(player, action, context)
    }

    fn reward(&self, player: usize, action: usize, context: &[f64]) -> f64 {
        (1.0 - self.travel_time(player, action, context) / self.bounds[player]).max(0.0)
    }

    fn noise_std(&self, _player: usize) -> f64 {
        self.noise_fraction
    }

    fn prior(&self, player: usize) -> Option<GpPrior> {
        let agent = self.player_routes(player);
        let scale = agent
            .edges
            .iter()
            .map(|&e| {
                if self.normalize {
                    1.0 / self.network.edges[e].capacity
                } else {
                    1.0
                }
            })
            .collect();
        Some(GpPrior {
            encoder: Arc::new(RouteEncoder {
                profiles: (0..agent.num_routes()).map(|r| agent.profile(r)).collect(),
                scale,
            }),
            kernel: self.kernels[player].clone(),
            prior_mean: 1.0,
        })
    }

    fn congestion(&self, joint: &[usize]) -> Option<f64> {
        congestion(&self.network, &self.total_loads(joint)).ok()
    }

    fn metadata(&self) -> serde_json::Value {
        serde_json::json!({
            "agents": self.all_routes.len(),
            "learners": self.learners,
            "routes_per_learner": (0..self.learners.len()).map(|p| self.num_actions(p)).collect::<Vec<_>>(),
            "travel_time_bounds": self.bounds,
        })
    }
}
