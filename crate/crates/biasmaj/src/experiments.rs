//! Replica batches, parameter sweeps and mean-field comparisons.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use biasmaj_core::dynamics::{self, default_max_rounds};
use biasmaj_core::mean_field::{self, MeanFieldParams, DEFAULT_TOL};
use biasmaj_core::rng::hash_words;
use biasmaj_core::stats::median;
use biasmaj_core::{
    init_random, phi_stats, BiasMode, Detail, DynamicsError, DynamicsParams, Family, Graph,
    GraphError, GraphKind, GraphSpec, MeanFieldError, Regime, RunRecord,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::edge_list::{self, EdgeListError};
use crate::engine::par_step;
use crate::format::g17;

pub const SCHEMA_VERSION: u32 = 1;

/// Rounds excluded from the metastability check while the process settles.
pub const WARMUP_ROUNDS: usize = 5;

/// Slack below `phi+` still counted as metastable.
pub const SLOW_GAMMA: f64 = 0.02;

pub const CSV_HEADER: [&str; 11] = [
    "k",
    "p",
    "q",
    "mode",
    "family",
    "graph",
    "n",
    "seed",
    "tau",
    "censored",
    "final_r_fraction",
];

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{pointer}: {message}")]
    Schema { pointer: String, message: String },
    #[error("cell k={k:?} p={p} q={q}: {source}")]
    Cell {
        k: Option<u32>,
        p: f64,
        q: f64,
        source: Box<ExperimentError>,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    EdgeList(#[from] EdgeListError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    MeanField(#[from] MeanFieldError),
    #[error("replica seeds collide: {0}")]
    SeedCollision(u64),
    #[error("the {0} family has no mean-field map")]
    NoMeanField(Family),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl ExperimentError {
    pub fn is_schema(&self) -> bool {
        matches!(self, ExperimentError::Schema { .. })
    }

    fn schema(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        ExperimentError::Schema {
            pointer: pointer.into(),
            message: message.into(),
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Builds a generated graph or reads an edge-list file.
pub fn build_graph(spec: &GraphSpec) -> Result<Graph, ExperimentError> {
    match &spec.kind {
        GraphKind::File { path } => Ok(edge_list::load(path)?),
        _ => Ok(biasmaj_core::generate(spec)?),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PGrid {
    pub min: f64,
    pub max: f64,
    /// Number of grid points including both ends.
    pub steps: usize,
}

impl PGrid {
    /// Grid values, rounded to 12 decimals so that `0.05 + 0.01 i` prints
    /// as written.
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        (0..self.steps)
            .map(|i| {
                let x = self.min + (self.max - self.min) * i as f64 / (self.steps - 1) as f64;
                (x * 1e12).round() / 1e12
            })
            .collect()
    }
}

fn default_family() -> Family {
    Family::KMajority
}

fn default_mode() -> BiasMode {
    BiasMode::EdgeBias
}

fn default_true() -> bool {
    true
}

/// Sweep configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub schema: u32,
    /// Graph in the `kind:key=value,...` syntax.
    pub graph: String,
    #[serde(default = "default_family")]
    pub family: Family,
    #[serde(default = "default_mode")]
    pub mode: BiasMode,
    /// Sample sizes; required for `kmaj`, omitted for `voter` and `det`.
    #[serde(default)]
    pub k: Vec<u32>,
    pub p: PGrid,
    pub q: Vec<f64>,
    pub replicas: usize,
    /// Defaults to `ceil(10 ln n) + 200`.
    #[serde(default)]
    pub max_rounds: Option<u64>,
    #[serde(default)]
    pub base_seed: u64,
    /// One graph for all cells instead of one per cell.
    #[serde(default = "default_true")]
    pub share_graph: bool,
    /// Output directory, relative to the config file.
    #[serde(default)]
    pub out: Option<String>,
}

fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut pointer = String::new();
    for segment in path.iter() {
        pointer.push('/');
        match segment {
            Segment::Seq { index } => pointer.push_str(&index.to_string()),
            Segment::Map { key } => pointer.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => pointer.push_str(variant),
            Segment::Unknown => pointer.push('?'),
        }
    }
    if pointer.is_empty() {
        pointer.push('/');
    }
    pointer
}

impl SweepSpec {
    /// Parses and validates; every error names the offending JSON pointer.
    pub fn from_json(text: &str) -> Result<SweepSpec, ExperimentError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let spec: SweepSpec = serde_path_to_error::deserialize(de).map_err(|e| {
            ExperimentError::schema(json_pointer(e.path()), e.inner().to_string())
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn graph_spec(&self) -> Result<GraphSpec, ExperimentError> {
        self.graph
            .parse()
            .map_err(|e: GraphError| ExperimentError::schema("/graph", e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |ptr: &str, msg: String| Err(ExperimentError::schema(ptr, msg));
        if self.schema != SCHEMA_VERSION {
            return bad("/schema", format!("unsupported schema {}, expected {SCHEMA_VERSION}", self.schema));
        }
        self.graph_spec()?;
        match self.family {
            Family::KMajority => {
                if self.k.is_empty() {
                    return bad("/k", "k-majority needs a non-empty list of sample sizes".into());
                }
                if let Some(i) = self.k.iter().position(|&k| k == 0) {
                    return bad(&format!("/k/{i}"), "sample size must be at least 1".into());
                }
            }
            Family::Voter if !(self.k.is_empty() || self.k == [1]) => {
                return bad("/k", "the voter family samples one neighbor; omit k".into());
            }
            Family::DeterministicMajority if !self.k.is_empty() => {
                return bad("/k", "deterministic majority reads the full neighborhood; omit k".into());
            }
            _ => {}
        }
        if self.p.steps == 0 {
            return bad("/p/steps", "the p grid is empty".into());
        }
        for (name, v) in [("min", self.p.min), ("max", self.p.max)] {
            if !(0.0..=1.0).contains(&v) {
                return bad(&format!("/p/{name}"), format!("{v} is outside [0, 1]"));
            }
        }
        if self.p.min > self.p.max {
            return bad("/p/max", "max is below min".into());
        }
        if self.q.is_empty() {
            return bad("/q", "the q grid is empty".into());
        }
        if let Some(i) = self.q.iter().position(|q| !(0.0..=1.0).contains(q)) {
            return bad(&format!("/q/{i}"), format!("{} is outside [0, 1]", self.q[i]));
        }
        if self.replicas == 0 {
            return bad("/replicas", "at least one replica is needed".into());
        }
        Ok(())
    }

    fn sample_sizes(&self) -> Vec<Option<u32>> {
        match self.family {
            Family::KMajority => self.k.iter().copied().map(Some).collect(),
            _ => vec![None],
        }
    }
}

/// One replica's row of `runs.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub k: Option<u32>,
    pub p: f64,
    pub q: f64,
    pub mode: BiasMode,
    pub family: Family,
    pub graph: String,
    pub n: usize,
    pub seed: u64,
    /// Disruption round, or the last round reached when censored.
    pub tau: u64,
    pub censored: bool,
    pub final_r_fraction: f64,
}

impl RunRow {
    fn fields(&self) -> [String; 11] {
        [
            self.k.map(|k| k.to_string()).unwrap_or_default(),
            g17(self.p),
            g17(self.q),
            self.mode.to_string(),
            self.family.to_string(),
            self.graph.clone(),
            self.n.to_string(),
            self.seed.to_string(),
            self.tau.to_string(),
            self.censored.to_string(),
            g17(self.final_r_fraction),
        ]
    }
}

/// Mean-field prediction attached to a cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub regime: Option<Regime>,
    pub phi_plus: Option<f64>,
    pub p_star_k: Option<f64>,
    pub p_star_kq: Option<f64>,
}

impl Prediction {
    const NONE: Prediction = Prediction {
        regime: None,
        phi_plus: None,
        p_star_k: None,
        p_star_kq: None,
    };
}

/// Mean-field prediction for a sweep cell. Even `k` uses the map of `k - 1`,
/// which is the same function.
pub fn predict(family: Family, k: Option<u32>, p: f64, q: f64, mode: BiasMode) -> Prediction {
    let k = match (family, k) {
        (Family::KMajority, Some(k)) => k - (1 - k % 2),
        (Family::Voter, _) => 1,
        _ => return Prediction::NONE,
    };
    let Ok(params) = MeanFieldParams::new(k, p, mode) else {
        return Prediction::NONE;
    };
    let fixed = mean_field::fixed_points(&params, DEFAULT_TOL).ok();
    let critical = if k >= 3 {
        if q > 0.5 {
            mean_field::critical_bias_kq(k, q, DEFAULT_TOL).ok()
        } else {
            mean_field::critical_bias_k(k, DEFAULT_TOL).ok()
        }
    } else {
        None
    };
    Prediction {
        regime: fixed.map(|f| f.regime),
        phi_plus: fixed.and_then(|f| f.phi_plus),
        p_star_k: critical.map(|c| c.p_star_k),
        p_star_kq: critical.and_then(|c| c.p_star_kq),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub k: Option<u32>,
    pub p: f64,
    pub q: f64,
    pub replicas: usize,
    /// Disruption times of the uncensored replicas, in replica order.
    pub tau_samples: Vec<u64>,
    pub censored: usize,
    pub censored_fraction: f64,
    /// Median over replicas of `tau`, censored replicas contributing the
    /// last round reached (a lower bound).
    pub median_tau: f64,
    /// Mean over uncensored replicas.
    pub mean_tau: Option<f64>,
    pub final_r_fraction_mean: f64,
    /// Censored replicas whose R-volume fraction stayed at or above
    /// `phi+ - 0.02` from round 5 on.
    pub metastable: usize,
    pub prediction: Prediction,
}

/// Whether a censored run stayed near the stable fixed point after warm-up.
pub fn is_metastable(record: &RunRecord, phi_plus: Option<f64>) -> bool {
    match phi_plus {
        Some(phi) if record.censored => record
            .trajectory
            .iter()
            .skip(WARMUP_ROUNDS)
            .all(|&x| x >= phi - SLOW_GAMMA),
        _ => false,
    }
}

/// Summarizes one cell's replicas.
pub fn summarize(
    k: Option<u32>,
    p: f64,
    q: f64,
    records: &[RunRecord],
    prediction: Prediction,
) -> CellSummary {
    let replicas = records.len();
    let tau_samples: Vec<u64> = records.iter().filter_map(|r| r.tau).collect();
    let censored = replicas - tau_samples.len();
    let lower_bounds: Vec<f64> = records.iter().map(|r| r.tau_or_rounds() as f64).collect();
    let mean_tau = (!tau_samples.is_empty())
        .then(|| tau_samples.iter().sum::<u64>() as f64 / tau_samples.len() as f64);
    CellSummary {
        k,
        p,
        q,
        replicas,
        censored,
        censored_fraction: censored as f64 / replicas as f64,
        median_tau: median(&lower_bounds).unwrap_or(f64::NAN),
        mean_tau,
        final_r_fraction_mean: records.iter().map(RunRecord::final_r_fraction).sum::<f64>()
            / replicas as f64,
        metastable: records
            .iter()
            .filter(|r| is_metastable(r, prediction.phi_plus))
            .count(),
        tau_samples,
        prediction,
    }
}

/// Per-replica seed: `base_seed` xor a hash of the cell and replica index.
pub fn replica_seed(
    base_seed: u64,
    family: Family,
    mode: BiasMode,
    k: Option<u32>,
    p: f64,
    q: f64,
    replica: usize,
) -> u64 {
    let cell = hash_words(&[
        family as u64,
        mode as u64,
        k.map_or(u64::MAX, u64::from),
        p.to_bits(),
        q.to_bits(),
    ]);
    base_seed ^ hash_words(&[cell, replica as u64])
}

/// Runs `replicas` independent seeded replicas in parallel, in order.
pub fn run_replicas(
    graph: &Graph,
    template: &DynamicsParams,
    q: f64,
    seeds: &[u64],
    detail: Detail,
) -> Result<Vec<RunRecord>, ExperimentError> {
    seeds
        .par_iter()
        .map(|&seed| {
            let params = template.with_seed(seed);
            let config0 = init_random(graph, q, seed)?;
            Ok(dynamics::run(graph, &config0, &params, detail))
        })
        .collect()
}

/// `p -> (median tau, censored fraction)` for one `(k, q)`, with the knee
/// and the mean-field critical bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisruptionCurve {
    pub k: Option<u32>,
    pub q: f64,
    pub points: Vec<CurvePoint>,
    /// First `p` whose censored fraction is below one half.
    pub knee: Option<f64>,
    pub p_star_kq: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub p: f64,
    pub median_tau: f64,
    pub censored_fraction: f64,
}

/// Builds the curve from the cells of one `(k, q)`; cells are sorted by `p`.
pub fn disruption_curve(cells: &[&CellSummary]) -> Option<DisruptionCurve> {
    let first = cells.first()?;
    let mut points: Vec<CurvePoint> = cells
        .iter()
        .map(|c| CurvePoint {
            p: c.p,
            median_tau: c.median_tau,
            censored_fraction: c.censored_fraction,
        })
        .collect();
    points.sort_by(|a, b| a.p.total_cmp(&b.p));
    let knee = points.iter().find(|pt| pt.censored_fraction < 0.5).map(|pt| pt.p);
    Some(DisruptionCurve {
        k: first.k,
        q: first.q,
        knee,
        p_star_kq: first.prediction.p_star_kq,
        points,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub n: usize,
    pub max_rounds: u64,
    pub rows: Vec<RunRow>,
    pub cells: Vec<CellSummary>,
    pub curves: Vec<DisruptionCurve>,
}

struct Cell {
    k: Option<u32>,
    p: f64,
    q: f64,
    seeds: Vec<u64>,
}

/// Runs every `(k, q, p)` cell of the sweep.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult, ExperimentError> {
    spec.validate()?;
    let graph_spec = spec.graph_spec()?;
    let shared = if spec.share_graph || matches!(graph_spec.kind, GraphKind::File { .. }) {
        Some(build_graph(&graph_spec)?)
    } else {
        None
    };

    let mut cells = Vec::new();
    let mut seen = HashSet::new();
    for k in spec.sample_sizes() {
        for &q in &spec.q {
            for p in spec.p.values() {
                let seeds: Vec<u64> = (0..spec.replicas)
                    .map(|r| replica_seed(spec.base_seed, spec.family, spec.mode, k, p, q, r))
                    .collect();
                for &s in &seeds {
                    if !seen.insert(s) {
                        return Err(ExperimentError::SeedCollision(s));
                    }
                }
                cells.push(Cell { k, p, q, seeds });
            }
        }
    }

    let mut predictions = BTreeMap::new();
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    let mut n = shared.as_ref().map_or(0, Graph::node_count);
    let mut max_rounds = 0;
    for (index, cell) in cells.iter().enumerate() {
        let with_cell = |e: ExperimentError| ExperimentError::Cell {
            k: cell.k,
            p: cell.p,
            q: cell.q,
            source: Box::new(e),
        };
        let own;
        let graph = match &shared {
            Some(g) => g,
            None => {
                let spec = GraphSpec::new(
                    graph_spec.kind.clone(),
                    hash_words(&[graph_spec.seed, index as u64]),
                );
                own = build_graph(&spec).map_err(with_cell)?;
                &own
            }
        };
        n = graph.node_count();
        max_rounds = spec.max_rounds.unwrap_or_else(|| default_max_rounds(n));
        let template = DynamicsParams::new(spec.family, cell.k, cell.p, spec.mode, 0, max_rounds)
            .map_err(|e| with_cell(e.into()))?;
        let records = run_replicas(graph, &template, cell.q, &cell.seeds, Detail::Summary)
            .map_err(with_cell)?;
        let prediction = *predictions
            .entry((cell.k, cell.p.to_bits(), cell.q.to_bits()))
            .or_insert_with(|| predict(spec.family, cell.k, cell.p, cell.q, spec.mode));
        for record in &records {
            rows.push(RunRow {
                k: cell.k,
                p: cell.p,
                q: cell.q,
                mode: spec.mode,
                family: spec.family,
                graph: spec.graph.clone(),
                n,
                seed: record.seed,
                tau: record.tau_or_rounds(),
                censored: record.censored,
                final_r_fraction: record.final_r_fraction(),
            });
        }
        summaries.push(summarize(cell.k, cell.p, cell.q, &records, prediction));
    }

    let mut groups: BTreeMap<(Option<u32>, u64), Vec<&CellSummary>> = BTreeMap::new();
    for c in &summaries {
        groups.entry((c.k, c.q.to_bits())).or_default().push(c);
    }
    let curves = groups.values().filter_map(|g| disruption_curve(g)).collect();
    Ok(SweepResult {
        spec: spec.clone(),
        n,
        max_rounds,
        rows,
        cells: summaries,
        curves,
    })
}

/// `runs.csv` contents.
pub fn runs_csv(rows: &[RunRow]) -> Vec<u8> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(CSV_HEADER).expect("in-memory write");
    for row in rows {
        writer.write_record(row.fields()).expect("in-memory write");
    }
    writer.into_inner().expect("in-memory flush")
}

#[derive(Serialize)]
struct Summary<'a> {
    schema: u32,
    graph: &'a str,
    n: usize,
    family: Family,
    mode: BiasMode,
    replicas: usize,
    max_rounds: u64,
    base_seed: u64,
    cells: &'a [CellSummary],
    curves: &'a [DisruptionCurve],
}

pub fn summary_json(result: &SweepResult) -> String {
    let summary = Summary {
        schema: SCHEMA_VERSION,
        graph: &result.spec.graph,
        n: result.n,
        family: result.spec.family,
        mode: result.spec.mode,
        replicas: result.spec.replicas,
        max_rounds: result.max_rounds,
        base_seed: result.spec.base_seed,
        cells: &result.cells,
        curves: &result.curves,
    };
    serde_json::to_string_pretty(&summary).expect("serializable") + "\n"
}

/// Writes `runs.csv` and `summary.json` into `dir`.
pub fn write_outputs(result: &SweepResult, dir: &Path) -> Result<(), ExperimentError> {
    fs::create_dir_all(dir).map_err(|e| ExperimentError::io(dir, e))?;
    for (name, bytes) in [
        ("runs.csv", runs_csv(&result.rows)),
        ("summary.json", summary_json(result).into_bytes()),
    ] {
        let path = dir.join(name);
        fs::File::create(&path)
            .and_then(|mut f| f.write_all(&bytes))
            .map_err(|e| ExperimentError::io(&path, e))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRound {
    pub t: usize,
    pub q_t: f64,
    pub phi_min: f64,
    pub phi_mean: f64,
    pub phi_max: f64,
    /// `max_u |phi_u - q_t|`.
    pub max_deviation: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub schema: u32,
    pub k: u32,
    pub p: f64,
    pub mode: BiasMode,
    pub q0: f64,
    pub seed: u64,
    pub gamma: f64,
    pub rounds: Vec<ComparisonRound>,
    pub max_deviation: f64,
    pub pass: bool,
}

/// Runs one trajectory for `rounds` rounds and compares every node's
/// R-neighbor fraction with the mean-field recursion.
pub fn meanfield_comparison(
    graph: &Graph,
    params: &DynamicsParams,
    q0: f64,
    rounds: usize,
    gamma: f64,
) -> Result<ComparisonReport, ExperimentError> {
    if params.family == Family::DeterministicMajority {
        return Err(ExperimentError::NoMeanField(params.family));
    }
    let mf = MeanFieldParams::new(params.k, params.p, params.mode)?;
    let expected = mean_field::trajectory(&mf, q0, rounds)?;
    let mut config = init_random(graph, q0, params.seed)?;
    let mut out = Vec::with_capacity(rounds + 1);
    for (t, &q_t) in expected.values.iter().enumerate() {
        if t > 0 {
            config = par_step(graph, &config, params);
        }
        let phi = phi_stats(graph, &config);
        let max_deviation = (phi.max - q_t).abs().max((phi.min - q_t).abs());
        out.push(ComparisonRound {
            t,
            q_t,
            phi_min: phi.min,
            phi_mean: phi.mean,
            phi_max: phi.max,
            max_deviation,
            pass: max_deviation <= gamma,
        });
    }
    let max_deviation = out.iter().map(|r| r.max_deviation).fold(0.0, f64::max);
    Ok(ComparisonReport {
        schema: SCHEMA_VERSION,
        k: params.k,
        p: params.p,
        mode: params.mode,
        q0,
        seed: params.seed,
        gamma,
        pass: out.iter().all(|r| r.pass),
        rounds: out,
        max_deviation,
    })
}
