//! Synchronous round engine for the biased majority processes.
//!
//! Every round each node computes its next state from the current
//! configuration only; the result is written to a fresh buffer. Randomness
//! for node `u` in round `t` comes from its own substream, so the order in
//! which nodes are updated does not matter.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use thiserror::Error;

use crate::graph::Graph;
use crate::mean_field::BiasMode;
use crate::rng::{Purpose, StreamFamily};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("bias p = {0} is outside [0, 1]")]
    InvalidBias(f64),
    #[error("initial fraction q = {0} is outside [0, 1]")]
    InvalidInitialFraction(f64),
    #[error("k-majority needs a sample size k >= 1")]
    MissingSampleSize,
    #[error("the voter dynamics samples exactly one neighbor, got k = {0}")]
    VoterSampleSize(u32),
    #[error("deterministic majority reads the full neighborhood and takes no k (got {0})")]
    UnexpectedSampleSize(u32),
    #[error("configuration has {got} states for a graph with {expected} nodes")]
    SizeMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum State {
    R,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Family {
    #[cfg_attr(feature = "serde", serde(rename = "kmaj"))]
    KMajority,
    #[cfg_attr(feature = "serde", serde(rename = "voter"))]
    Voter,
    #[cfg_attr(feature = "serde", serde(rename = "det"))]
    DeterministicMajority,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::KMajority => "kmaj",
            Family::Voter => "voter",
            Family::DeterministicMajority => "det",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = alloc::string::String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "kmaj" => Ok(Family::KMajority),
            "voter" => Ok(Family::Voter),
            "det" => Ok(Family::DeterministicMajority),
            other => Err(alloc::format!(
                "unknown family `{other}` (expected kmaj, voter or det)"
            )),
        }
    }
}

/// Parameters of one run. `k` is 1 for the voter family and 0 (unused) for
/// deterministic majority.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DynamicsParams {
    pub family: Family,
    pub k: u32,
    pub p: f64,
    pub mode: BiasMode,
    pub seed: u64,
    pub max_rounds: u64,
}

impl DynamicsParams {
    pub fn new(
        family: Family,
        k: Option<u32>,
        p: f64,
        mode: BiasMode,
        seed: u64,
        max_rounds: u64,
    ) -> Result<Self, DynamicsError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(DynamicsError::InvalidBias(p));
        }
        let k = match (family, k) {
            (Family::KMajority, Some(k)) if k >= 1 => k,
            (Family::KMajority, _) => return Err(DynamicsError::MissingSampleSize),
            (Family::Voter, None | Some(1)) => 1,
            (Family::Voter, Some(k)) => return Err(DynamicsError::VoterSampleSize(k)),
            (Family::DeterministicMajority, None) => 0,
            (Family::DeterministicMajority, Some(k)) => {
                return Err(DynamicsError::UnexpectedSampleSize(k))
            }
        };
        Ok(DynamicsParams {
            family,
            k,
            p,
            mode,
            seed,
            max_rounds,
        })
    }

    pub fn k_majority(k: u32, p: f64, mode: BiasMode, seed: u64, max_rounds: u64) -> Result<Self, DynamicsError> {
        Self::new(Family::KMajority, Some(k), p, mode, seed, max_rounds)
    }

    pub fn voter(p: f64, mode: BiasMode, seed: u64, max_rounds: u64) -> Result<Self, DynamicsError> {
        Self::new(Family::Voter, None, p, mode, seed, max_rounds)
    }

    pub fn deterministic(p: f64, mode: BiasMode, seed: u64, max_rounds: u64) -> Result<Self, DynamicsError> {
        Self::new(Family::DeterministicMajority, None, p, mode, seed, max_rounds)
    }

    pub fn with_seed(self, seed: u64) -> Self {
        DynamicsParams { seed, ..self }
    }
}

/// `ceil(10 ln n) + 200`.
pub fn default_max_rounds(n: usize) -> u64 {
    libm::ceil(10.0 * libm::log(n.max(1) as f64)) as u64 + 200
}

/// Node states at a round together with cached volume and per-node
/// R-neighbor counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    states: Vec<State>,
    round: u64,
    r_volume: u64,
    r_nodes: usize,
    /// Per-node R-neighbor counts; left empty on complete graphs, where the
    /// count is `r_nodes` minus the node's own contribution.
    r_neighbors: Vec<u32>,
}

impl Configuration {
    pub fn from_states(graph: &Graph, states: Vec<State>) -> Result<Self, DynamicsError> {
        if states.len() != graph.node_count() {
            return Err(DynamicsError::SizeMismatch {
                expected: graph.node_count(),
                got: states.len(),
            });
        }
        let mut config = Configuration {
            states,
            round: 0,
            r_volume: 0,
            r_nodes: 0,
            r_neighbors: Vec::new(),
        };
        config.rebuild_caches(graph);
        Ok(config)
    }

    pub fn uniform(graph: &Graph, state: State) -> Self {
        Self::from_states(graph, alloc::vec![state; graph.node_count()]).expect("sized to graph")
    }

    fn rebuild_caches(&mut self, graph: &Graph) {
        self.r_volume = volume_of_r(graph, &self.states);
        self.r_nodes = self.states.iter().filter(|&&s| s == State::R).count();
        self.r_neighbors = if graph.is_complete() {
            Vec::new()
        } else {
            count_r_neighbors(graph, &self.states)
        };
    }

    /// Configuration one round later with the given states, updating the
    /// caches from the set of nodes that changed.
    pub fn advanced(&self, graph: &Graph, states: Vec<State>) -> Configuration {
        assert_eq!(states.len(), self.states.len(), "state vector size");
        let mut next = Configuration {
            states,
            round: self.round + 1,
            r_volume: self.r_volume,
            r_nodes: self.r_nodes,
            r_neighbors: self.r_neighbors.clone(),
        };
        let mut touched = 0u64;
        for u in 0..next.states.len() {
            if next.states[u] == self.states[u] {
                continue;
            }
            let deg = graph.degree(u) as u64;
            touched += deg;
            if next.states[u] == State::R {
                next.r_volume += deg;
                next.r_nodes += 1;
            } else {
                next.r_volume -= deg;
                next.r_nodes -= 1;
            }
        }
        if !graph.is_complete() {
            if touched > graph.total_volume() / 2 {
                next.r_neighbors = count_r_neighbors(graph, &next.states);
            } else {
                for u in 0..next.states.len() {
                    let (old, new) = (self.states[u], next.states[u]);
                    if old == new {
                        continue;
                    }
                    for &v in graph.neighbors(u) {
                        let c = &mut next.r_neighbors[v as usize];
                        if new == State::R {
                            *c += 1;
                        } else {
                            *c -= 1;
                        }
                    }
                }
            }
        }
        debug_assert_eq!(next.r_volume, volume_of_r(graph, &next.states));
        next
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn state(&self, u: usize) -> State {
        self.states[u]
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn r_volume(&self) -> u64 {
        self.r_volume
    }

    pub fn r_nodes(&self) -> usize {
        self.r_nodes
    }

    pub fn r_fraction(&self, graph: &Graph) -> f64 {
        self.r_volume as f64 / graph.total_volume() as f64
    }

    /// B holds strictly more than half of the volume.
    pub fn is_disrupted(&self, graph: &Graph) -> bool {
        2 * (graph.total_volume() - self.r_volume) > graph.total_volume()
    }

    pub fn is_all_b(&self) -> bool {
        self.r_nodes == 0
    }

    pub fn is_all_r(&self) -> bool {
        self.r_nodes == self.states.len()
    }

    /// Number of neighbors of `u` in state R.
    pub fn r_neighbor_count(&self, graph: &Graph, u: usize) -> usize {
        if graph.is_complete() {
            self.r_nodes - usize::from(self.states[u] == State::R)
        } else {
            self.r_neighbors[u] as usize
        }
    }

    /// Recomputes every cache from scratch and compares.
    pub fn caches_consistent(&self, graph: &Graph) -> bool {
        let mut fresh = self.clone();
        fresh.rebuild_caches(graph);
        fresh.r_volume == self.r_volume
            && fresh.r_nodes == self.r_nodes
            && (0..self.states.len())
                .all(|u| fresh.r_neighbor_count(graph, u) == self.r_neighbor_count(graph, u))
    }
}

fn volume_of_r(graph: &Graph, states: &[State]) -> u64 {
    states
        .iter()
        .enumerate()
        .filter(|(_, &s)| s == State::R)
        .map(|(u, _)| graph.degree(u) as u64)
        .sum()
}

fn count_r_neighbors(graph: &Graph, states: &[State]) -> Vec<u32> {
    (0..states.len())
        .map(|u| {
            graph
                .neighbors(u)
                .iter()
                .filter(|&&v| states[v as usize] == State::R)
                .count() as u32
        })
        .collect()
}

/// Each node independently R with probability `q`.
pub fn init_random(graph: &Graph, q: f64, seed: u64) -> Result<Configuration, DynamicsError> {
    if !(0.0..=1.0).contains(&q) {
        return Err(DynamicsError::InvalidInitialFraction(q));
    }
    let family = StreamFamily::new(seed, Purpose::Init, 0);
    let states = (0..graph.node_count())
        .map(|u| {
            if family.stream(u).random_bool(q) {
                State::R
            } else {
                State::B
            }
        })
        .collect();
    Configuration::from_states(graph, states)
}

/// Decides `r` perceived R against `total - r` perceived B; ties are a fair coin.
fn majority<R: Rng>(r: u64, total: u64, rng: &mut R) -> State {
    let b = total - r;
    match r.cmp(&b) {
        core::cmp::Ordering::Greater => State::R,
        core::cmp::Ordering::Less => State::B,
        core::cmp::Ordering::Equal => {
            if rng.random_bool(0.5) {
                State::R
            } else {
                State::B
            }
        }
    }
}

/// Next state of node `u` given the round's stream family.
pub fn update_node(
    graph: &Graph,
    config: &Configuration,
    params: &DynamicsParams,
    streams: &StreamFamily,
    u: usize,
) -> State {
    let mut rng = streams.stream(u);
    let p = params.p;
    if params.mode == BiasMode::NodeBias && rng.random_bool(p) {
        return State::B;
    }
    let edge_bias = params.mode == BiasMode::EdgeBias;
    match params.family {
        Family::KMajority | Family::Voter => {
            let neighbors = graph.neighbors(u);
            let mut seen_r = 0u64;
            for _ in 0..params.k {
                let v = neighbors[rng.random_range(0..neighbors.len())] as usize;
                if config.states[v] == State::R && !(edge_bias && rng.random_bool(p)) {
                    seen_r += 1;
                }
            }
            majority(seen_r, u64::from(params.k), &mut rng)
        }
        Family::DeterministicMajority => {
            let deg = graph.degree(u) as u64;
            let r = config.r_neighbor_count(graph, u) as u64;
            // Each R neighbor independently survives the channel with
            // probability 1-p; only the count matters.
            let seen_r = if edge_bias && r > 0 && p > 0.0 {
                if p >= 1.0 {
                    0
                } else {
                    Binomial::new(r, 1.0 - p)
                        .expect("probability validated")
                        .sample(&mut rng)
                }
            } else {
                r
            };
            majority(seen_r, deg, &mut rng)
        }
    }
}

/// Streams used to produce round `config.round() + 1`.
pub fn round_streams(params: &DynamicsParams, config: &Configuration) -> StreamFamily {
    StreamFamily::new(params.seed, Purpose::Step, config.round + 1)
}

/// One synchronous round.
pub fn step(graph: &Graph, config: &Configuration, params: &DynamicsParams) -> Configuration {
    let streams = round_streams(params, config);
    let states = (0..graph.node_count())
        .map(|u| update_node(graph, config, params, &streams, u))
        .collect();
    config.advanced(graph, states)
}

/// Minimum, mean and maximum over nodes of the R fraction of the neighborhood.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhiStats {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

pub fn phi_stats(graph: &Graph, config: &Configuration) -> PhiStats {
    let n = graph.node_count();
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for u in 0..n {
        let phi = config.r_neighbor_count(graph, u) as f64 / graph.degree(u) as f64;
        min = min.min(phi);
        max = max.max(phi);
        sum += phi;
    }
    PhiStats {
        min,
        mean: sum / n as f64,
        max,
    }
}

/// How much of each round a run records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Detail {
    /// R-volume fraction only.
    #[default]
    Summary,
    /// Also the per-round neighborhood statistics.
    Full,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunRecord {
    /// First round with B volume above one half; `None` when censored.
    pub tau: Option<u64>,
    pub censored: bool,
    /// Last round simulated.
    pub rounds: u64,
    /// R-volume fraction at rounds `0..=rounds`.
    pub trajectory: Vec<f64>,
    pub phi: Option<Vec<PhiStats>>,
    pub seed: u64,
    pub params: DynamicsParams,
}

impl RunRecord {
    pub fn final_r_fraction(&self) -> f64 {
        *self.trajectory.last().expect("trajectory holds round 0")
    }

    /// `tau`, or the number of rounds survived when censored.
    pub fn tau_or_rounds(&self) -> u64 {
        self.tau.unwrap_or(self.rounds)
    }
}

/// Steps until the R majority is subverted or `max_rounds` is reached.
pub fn run(graph: &Graph, config0: &Configuration, params: &DynamicsParams, detail: Detail) -> RunRecord {
    run_with_final(graph, config0, params, detail).0
}

/// [`run`], also returning the last configuration.
pub fn run_with_final(
    graph: &Graph,
    config0: &Configuration,
    params: &DynamicsParams,
    detail: Detail,
) -> (RunRecord, Configuration) {
    run_using(graph, config0, params, detail, step)
}

/// [`run_with_final`] with a caller-supplied round function, which must
/// produce the same configuration as [`step`].
pub fn run_using<S>(
    graph: &Graph,
    config0: &Configuration,
    params: &DynamicsParams,
    detail: Detail,
    mut stepper: S,
) -> (RunRecord, Configuration)
where
    S: FnMut(&Graph, &Configuration, &DynamicsParams) -> Configuration,
{
    let mut config = config0.clone();
    let mut trajectory = alloc::vec![config.r_fraction(graph)];
    let mut phi = (detail == Detail::Full).then(|| alloc::vec![phi_stats(graph, &config)]);
    let start = config.round;
    let mut tau = None;
    loop {
        if config.is_disrupted(graph) {
            tau = Some(config.round - start);
            break;
        }
        if config.round - start >= params.max_rounds {
            break;
        }
        config = stepper(graph, &config, params);
        trajectory.push(config.r_fraction(graph));
        if let Some(phi) = phi.as_mut() {
            phi.push(phi_stats(graph, &config));
        }
    }
    let record = RunRecord {
        tau,
        censored: tau.is_none(),
        rounds: config.round - start,
        trajectory,
        phi,
        seed: params.seed,
        params: *params,
    };
    (record, config)
}
