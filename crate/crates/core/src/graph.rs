//! Static simple undirected graphs in compressed adjacency form.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::rng::{Purpose, StreamFamily};

/// Attempts of the random-regular construction before giving up.
pub const REGULAR_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(usize, usize),
    #[error("node id {node} out of range for {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("node {0} is isolated")]
    IsolatedNode(usize),
    #[error("graph needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("invalid graph spec: {0}")]
    InvalidSpec(String),
    #[error("random regular construction failed after {0} attempts")]
    RegularConstructionFailed(usize),
    #[error("file graphs ({0}) must be loaded through the edge-list reader")]
    NeedsIo(String),
    #[error("adjacency is not symmetric at {0}-{1}")]
    Asymmetric(usize, usize),
}

/// Simple undirected graph; every node has at least one neighbor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    total_volume: u64,
    complete: bool,
}

impl Graph {
    /// Builds a graph from an undirected edge list, each edge listed once.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Graph, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n < 2 {
            return Err(GraphError::TooFewNodes(n));
        }
        if n > u32::MAX as usize {
            return Err(GraphError::InvalidSpec(format!("{n} nodes is too many")));
        }
        let mut adjacency: Vec<Vec<u32>> = alloc::vec![Vec::new(); n];
        for (u, v) in edges {
            for node in [u, v] {
                if node >= n {
                    return Err(GraphError::NodeOutOfRange { node, n });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            adjacency[u].push(v as u32);
            adjacency[v].push(u as u32);
        }
        for (u, list) in adjacency.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                let v = w[0] as usize;
                return Err(GraphError::DuplicateEdge(u.min(v), u.max(v)));
            }
        }
        Self::from_sorted_adjacency(adjacency)
    }

    fn from_sorted_adjacency(adjacency: Vec<Vec<u32>>) -> Result<Graph, GraphError> {
        let n = adjacency.len();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut neighbors = Vec::with_capacity(adjacency.iter().map(Vec::len).sum());
        for (u, list) in adjacency.into_iter().enumerate() {
            if list.is_empty() {
                return Err(GraphError::IsolatedNode(u));
            }
            neighbors.extend_from_slice(&list);
            offsets.push(neighbors.len());
        }
        let total_volume = neighbors.len() as u64;
        let complete = total_volume == (n as u64) * (n as u64 - 1);
        Ok(Graph {
            offsets,
            neighbors,
            total_volume,
            complete,
        })
    }

    /// The complete graph `K_n`.
    pub fn complete(n: usize) -> Result<Graph, GraphError> {
        if n < 2 {
            return Err(GraphError::TooFewNodes(n));
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut neighbors = Vec::with_capacity(n * (n - 1));
        offsets.push(0);
        for u in 0..n as u32 {
            neighbors.extend((0..n as u32).filter(|&v| v != u));
            offsets.push(neighbors.len());
        }
        Ok(Graph {
            offsets,
            total_volume: neighbors.len() as u64,
            neighbors,
            complete: true,
        })
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Sorted neighbor ids of `u`.
    pub fn neighbors(&self, u: usize) -> &[u32] {
        &self.neighbors[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    pub fn degrees(&self) -> impl Iterator<Item = usize> + '_ {
        self.offsets.windows(2).map(|w| w[1] - w[0])
    }

    /// Sum of degrees, `2|E|`.
    pub fn total_volume(&self) -> u64 {
        self.total_volume
    }

    pub fn edge_count(&self) -> usize {
        (self.total_volume / 2) as usize
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    /// Each edge once, as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.node_count()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .map(|&v| v as usize)
                .filter(move |&v| u < v)
                .map(move |v| (u, v))
        })
    }

    /// Re-checks every structural invariant.
    pub fn validate(&self) -> Result<(), GraphError> {
        let n = self.node_count();
        let mut volume = 0u64;
        for u in 0..n {
            let list = self.neighbors(u);
            if list.is_empty() {
                return Err(GraphError::IsolatedNode(u));
            }
            volume += list.len() as u64;
            for w in list.windows(2) {
                if w[0] >= w[1] {
                    return Err(GraphError::DuplicateEdge(u, w[1] as usize));
                }
            }
            for &v in list {
                let v = v as usize;
                if v >= n {
                    return Err(GraphError::NodeOutOfRange { node: v, n });
                }
                if v == u {
                    return Err(GraphError::SelfLoop(u));
                }
                if !self.has_edge(v, u) {
                    return Err(GraphError::Asymmetric(u, v));
                }
            }
        }
        if volume != self.total_volume {
            return Err(GraphError::InvalidSpec("cached volume mismatch".to_string()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphKind {
    Complete { n: usize },
    Gnp { n: usize, edge_prob: f64 },
    RandomRegular { n: usize, d: usize },
    File { path: String },
}

/// How to obtain a graph; the string form is `complete:n=1000`,
/// `gnp:n=1000,p=0.3`, `regular:n=1000,d=200` or `file:PATH`, with an
/// optional `,seed=S` on the generated kinds.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSpec {
    pub kind: GraphKind,
    pub seed: u64,
}

impl GraphSpec {
    pub fn new(kind: GraphKind, seed: u64) -> Self {
        GraphSpec { kind, seed }
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        let bad = |msg: String| Err(GraphError::InvalidSpec(msg));
        match self.kind {
            GraphKind::Complete { n } => {
                if n < 2 {
                    return Err(GraphError::TooFewNodes(n));
                }
            }
            GraphKind::Gnp { n, edge_prob } => {
                if n < 2 {
                    return Err(GraphError::TooFewNodes(n));
                }
                if !(edge_prob >= 0.0 && edge_prob <= 1.0) {
                    return bad(format!("edge probability {edge_prob} is outside [0, 1]"));
                }
            }
            GraphKind::RandomRegular { n, d } => {
                if n < 2 {
                    return Err(GraphError::TooFewNodes(n));
                }
                if d == 0 || d >= n {
                    return bad(format!("degree {d} must satisfy 1 <= d < n = {n}"));
                }
                if (d * n) % 2 == 1 {
                    return bad(format!("d * n = {} must be even", d * n));
                }
            }
            GraphKind::File { ref path } => {
                if path.is_empty() {
                    return bad("empty file path".to_string());
                }
            }
        }
        Ok(())
    }

    /// Node count when known without reading a file.
    pub fn node_count(&self) -> Option<usize> {
        match self.kind {
            GraphKind::Complete { n }
            | GraphKind::Gnp { n, .. }
            | GraphKind::RandomRegular { n, .. } => Some(n),
            GraphKind::File { .. } => None,
        }
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            GraphKind::Complete { n } => write!(f, "complete:n={n}"),
            GraphKind::Gnp { n, edge_prob } => write!(f, "gnp:n={n},p={edge_prob}"),
            GraphKind::RandomRegular { n, d } => write!(f, "regular:n={n},d={d}"),
            GraphKind::File { path } => write!(f, "file:{path}"),
        }
    }
}

impl FromStr for GraphSpec {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |msg: String| GraphError::InvalidSpec(msg);
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| bad(format!("`{s}`: expected KIND:ARGS")))?;
        if kind == "file" {
            let spec = GraphSpec::new(GraphKind::File { path: rest.to_string() }, 0);
            spec.validate()?;
            return Ok(spec);
        }
        let mut args = BTreeMap::new();
        for part in rest.split(',').filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| bad(format!("`{part}`: expected KEY=VALUE")))?;
            if args.insert(key, value).is_some() {
                return Err(bad(format!("repeated key `{key}`")));
            }
        }
        let mut take = |key: &str| args.remove(key);
        let int = |key: &str, value: Option<&str>| -> Result<usize, GraphError> {
            let value = value.ok_or_else(|| bad(format!("{kind}: missing `{key}`")))?;
            value
                .parse()
                .map_err(|_| bad(format!("{key}={value} is not a non-negative integer")))
        };
        let seed = match take("seed") {
            Some(v) => v
                .parse()
                .map_err(|_| bad(format!("seed={v} is not an unsigned integer")))?,
            None => 0,
        };
        let kind = match kind {
            "complete" => GraphKind::Complete {
                n: int("n", take("n"))?,
            },
            "gnp" => {
                let n = int("n", take("n"))?;
                let p = take("p").ok_or_else(|| bad("gnp: missing `p`".to_string()))?;
                let edge_prob = p
                    .parse()
                    .map_err(|_| bad(format!("p={p} is not a number")))?;
                GraphKind::Gnp { n, edge_prob }
            }
            "regular" => GraphKind::RandomRegular {
                n: int("n", take("n"))?,
                d: int("d", take("d"))?,
            },
            other => return Err(bad(format!("unknown graph kind `{other}`"))),
        };
        if let Some(key) = args.keys().next() {
            return Err(bad(format!("unknown key `{key}`")));
        }
        let spec = GraphSpec::new(kind, seed);
        spec.validate()?;
        Ok(spec)
    }
}

/// Builds the graph described by `spec`; deterministic in the seed.
pub fn generate(spec: &GraphSpec) -> Result<Graph, GraphError> {
    spec.validate()?;
    let family = StreamFamily::new(spec.seed, Purpose::Graph, 0);
    match spec.kind {
        GraphKind::Complete { n } => Graph::complete(n),
        GraphKind::Gnp { n, edge_prob } => {
            let mut rng = family.sequential();
            let mut adjacency: Vec<Vec<u32>> = alloc::vec![Vec::new(); n];
            for u in 0..n {
                for v in u + 1..n {
                    if rng.random_bool(edge_prob) {
                        adjacency[u].push(v as u32);
                        adjacency[v].push(u as u32);
                    }
                }
            }
            for list in &mut adjacency {
                list.sort_unstable();
            }
            Graph::from_sorted_adjacency(adjacency)
        }
        GraphKind::RandomRegular { n, d } => {
            let mut rng = family.sequential();
            for _ in 0..REGULAR_ATTEMPTS {
                if let Some(edges) = try_regular(n, d, &mut rng) {
                    return Graph::from_edges(n, edges.into_iter().map(|(u, v)| (u as usize, v as usize)));
                }
            }
            Err(GraphError::RegularConstructionFailed(REGULAR_ATTEMPTS))
        }
        GraphKind::File { ref path } => Err(GraphError::NeedsIo(path.clone())),
    }
}

/// One pass of the stub-pairing construction: shuffle the remaining stubs,
/// keep every pair that forms a new simple edge and re-pair the leftovers.
/// Gives up when no leftover pair can ever form a new edge.
fn try_regular<R: Rng>(n: usize, d: usize, rng: &mut R) -> Option<BTreeSet<(u32, u32)>> {
    let mut edges = BTreeSet::new();
    let mut stubs: Vec<u32> = (0..n as u32).flat_map(|u| core::iter::repeat_n(u, d)).collect();
    while !stubs.is_empty() {
        let mut leftover: BTreeMap<u32, usize> = BTreeMap::new();
        stubs.shuffle(rng);
        for pair in stubs.chunks_exact(2) {
            let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if a != b && edges.insert((a, b)) {
                continue;
            }
            *leftover.entry(a).or_default() += 1;
            *leftover.entry(b).or_default() += 1;
        }
        if !leftover.is_empty() {
            let nodes: Vec<u32> = leftover.keys().copied().collect();
            let feasible = nodes.iter().enumerate().any(|(i, &a)| {
                nodes[i + 1..].iter().any(|&b| !edges.contains(&(a, b)))
            });
            if !feasible {
                return None;
            }
        }
        stubs = leftover
            .into_iter()
            .flat_map(|(u, count)| core::iter::repeat_n(u, count))
            .collect();
    }
    Some(edges)
}

/// Degree statistics against the `ln n` scale of the density assumption.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DensityReport {
    pub min_degree: usize,
    pub max_degree: usize,
    pub mean_degree: f64,
    pub log_n: f64,
    pub min_degree_over_log_n: f64,
    /// Set when `min_degree < 4 ln n`.
    pub sparse_warning: bool,
}

/// Multiple of `ln n` below which the minimum degree is flagged.
pub const DENSITY_WARNING_FACTOR: f64 = 4.0;

pub fn density_report(graph: &Graph) -> DensityReport {
    let n = graph.node_count();
    let (min_degree, max_degree) = graph
        .degrees()
        .fold((usize::MAX, 0), |(lo, hi), d| (lo.min(d), hi.max(d)));
    let log_n = libm::log(n as f64);
    DensityReport {
        min_degree,
        max_degree,
        mean_degree: graph.total_volume() as f64 / n as f64,
        log_n,
        min_degree_over_log_n: min_degree as f64 / log_n,
        sparse_warning: (min_degree as f64) < DENSITY_WARNING_FACTOR * log_n,
    }
}
