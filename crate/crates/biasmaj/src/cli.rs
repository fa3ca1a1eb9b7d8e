//! The `biasmaj` command line.
//!
//! Every command prints one JSON document to stdout. Failures print
//! `{"schema": 1, "error": {"kind": ..., "message": ...}}` to stderr and exit
//! with 2 for usage errors (bad flags, invalid parameters, schema
//! violations) or 1 for failures while doing the work.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use biasmaj_core::dynamics::default_max_rounds;
use biasmaj_core::mean_field::{self, MeanFieldParams, DEFAULT_TOL};
use biasmaj_core::{
    density_report, init_random, BiasMode, Detail, DynamicsParams, Family, GraphKind, GraphSpec,
};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::edge_list;
use crate::engine::par_run;
use crate::experiments::{self, build_graph, ExperimentError, SweepSpec, SCHEMA_VERSION};
use crate::format::g17;

#[derive(Debug, Parser)]
#[command(name = "biasmaj", version, about = "Biased k-majority dynamics: mean-field analysis and simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fixed points, regime and tangency point of the mean-field map.
    Meanfield(MeanfieldArgs),
    /// Critical bias values p*_k and p*_{k,q}.
    Critical(CriticalArgs),
    /// Run one simulation and report the disruption time.
    Simulate(SimulateArgs),
    /// Run a parameter sweep described by a JSON config.
    Sweep(SweepArgs),
    /// Compare one simulated trajectory with the mean-field recursion.
    Compare(CompareArgs),
    /// Write a generated graph as an edge list.
    Graphgen(GraphgenArgs),
}

#[derive(Debug, Args)]
pub struct MeanfieldArgs {
    /// Sample size (even k uses the equivalent odd map for fixed points).
    #[arg(long)]
    pub k: u32,
    /// Bias probability in [0, 1].
    #[arg(long)]
    pub p: f64,
    /// Bias mode: edge or node.
    #[arg(long, default_value_t = BiasMode::EdgeBias)]
    pub mode: BiasMode,
    /// Initial fraction for a mean-field trajectory.
    #[arg(long)]
    pub q0: Option<f64>,
    /// Trajectory length (used with --q0).
    #[arg(long, default_value_t = 50)]
    pub rounds: usize,
    /// Also evaluate the map (and, for odd k, its derivatives) at x.
    #[arg(long)]
    pub x: Option<f64>,
    /// Solver tolerance.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct CriticalArgs {
    /// Sample size, at least 2 (even k uses the equivalent odd map).
    #[arg(long)]
    pub k: u32,
    /// Initial fraction in (1/2, 1] for p*_{k,q}.
    #[arg(long)]
    pub q: Option<f64>,
    /// Solver tolerance.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct DynamicsArgs {
    /// Graph: complete:n=N, gnp:n=N,p=P[,seed=S], regular:n=N,d=D[,seed=S] or file:PATH.
    #[arg(long)]
    pub graph: GraphSpec,
    /// Dynamics family: kmaj, voter or det.
    #[arg(long, default_value_t = Family::KMajority)]
    pub family: Family,
    /// Sample size (kmaj only).
    #[arg(long)]
    pub k: Option<u32>,
    /// Bias probability in [0, 1].
    #[arg(long)]
    pub p: f64,
    /// Bias mode: edge or node.
    #[arg(long, default_value_t = BiasMode::EdgeBias)]
    pub mode: BiasMode,
    /// Seed for initialization and dynamics.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub dynamics: DynamicsArgs,
    /// Probability that a node starts in R.
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    /// Round cap [default: ceil(10 ln n) + 200].
    #[arg(long)]
    pub max_rounds: Option<u64>,
    /// Write a per-round CSV trace to this path.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Sweep configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub dynamics: DynamicsArgs,
    /// Initial R fraction.
    #[arg(long, default_value_t = 1.0)]
    pub q0: f64,
    /// Rounds to compare.
    #[arg(long, default_value_t = 50)]
    pub rounds: usize,
    /// Allowed deviation from the mean-field value.
    #[arg(long, default_value_t = 0.02)]
    pub gamma: f64,
}

#[derive(Debug, Args)]
pub struct GraphgenArgs {
    /// Graph: complete:n=N, gnp:n=N,p=P or regular:n=N,d=D.
    #[arg(long)]
    pub spec: GraphSpec,
    /// Output edge-list path.
    #[arg(long)]
    pub out: PathBuf,
    /// Generator seed; overrides a seed given in the spec.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Why a command failed.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }

    fn to_json(&self) -> Value {
        let (kind, message) = match self {
            Failure::Usage(m) => ("usage", m.clone()),
            Failure::Runtime(e) => ("runtime", format!("{e:#}")),
        };
        json!({"schema": SCHEMA_VERSION, "error": {"kind": kind, "message": message}})
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit code.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    0
                }
                _ => {
                    let failure = Failure::Usage(e.render().to_string().trim_end().to_string());
                    let _ = writeln!(stderr, "{}", failure.to_json());
                    failure.exit_code()
                }
            };
        }
    };
    match execute(cli.command, stderr) {
        Ok(value) => {
            let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(&value).expect("json"));
            0
        }
        Err(failure) => {
            let _ = writeln!(stderr, "{}", failure.to_json());
            failure.exit_code()
        }
    }
}

pub fn execute(command: Command, stderr: &mut dyn Write) -> Result<Value, Failure> {
    match command {
        Command::Meanfield(a) => meanfield(a),
        Command::Critical(a) => critical(a),
        Command::Simulate(a) => simulate(a, stderr),
        Command::Sweep(a) => sweep(a),
        Command::Compare(a) => compare(a),
        Command::Graphgen(a) => graphgen(a),
    }
}

fn check_unit(name: &str, v: f64) -> Result<(), Failure> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Failure::Usage(format!("--{name} {v} is outside [0, 1]")))
    }
}

fn check_tol(tol: f64) -> Result<(), Failure> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("--tol {tol} must be positive")))
    }
}

fn meanfield(a: MeanfieldArgs) -> Result<Value, Failure> {
    let params = MeanFieldParams::new(a.k, a.p, a.mode).map_err(usage)?;
    check_tol(a.tol)?;
    if let Some(q0) = a.q0 {
        check_unit("q0", q0)?;
    }
    if let Some(x) = a.x {
        check_unit("x", x)?;
    }
    let solved = params.odd_equivalent();
    let fixed = mean_field::fixed_points(&solved, a.tol)
        .context("fixed points")
        .map_err(Failure::Runtime)?;
    let mut out = json!({
        "schema": SCHEMA_VERSION,
        "k": a.k,
        "solved_k": solved.k,
        "p": a.p,
        "mode": a.mode,
        "tolerance": a.tol,
        "regime": fixed.regime,
        "roots": fixed.roots(),
        "trivial_root": fixed.trivial_root,
        "phi_minus": fixed.phi_minus,
        "phi_plus": fixed.phi_plus,
        "mu": fixed.mu,
    });
    if let Some(x) = a.x {
        let mut point = json!({"x": x, "value": params.map(x).map_err(|e| Failure::Runtime(e.into()))?});
        if a.k % 2 == 1 {
            point["derivative"] = json!(mean_field::eval_df(&params, x).map_err(|e| Failure::Runtime(e.into()))?);
            point["second_derivative"] =
                json!(mean_field::eval_d2f(&params, x).map_err(|e| Failure::Runtime(e.into()))?);
        }
        out["point"] = point;
    }
    if let Some(q0) = a.q0 {
        let traj = mean_field::trajectory(&params, q0, a.rounds).map_err(|e| Failure::Runtime(e.into()))?;
        out["trajectory"] = json!(traj.values);
    }
    Ok(out)
}

fn critical(a: CriticalArgs) -> Result<Value, Failure> {
    if a.k < 2 {
        return Err(Failure::Usage(format!("--k {}: the voter dynamics has no critical bias", a.k)));
    }
    let solved = MeanFieldParams::new(a.k, 0.0, BiasMode::EdgeBias)
        .map_err(usage)?
        .odd_equivalent()
        .k;
    check_tol(a.tol)?;
    let values = match a.q {
        Some(q) if !(q > 0.5 && q <= 1.0) => {
            return Err(Failure::Usage(format!("--q {q} must lie in (1/2, 1]")));
        }
        Some(q) => mean_field::critical_bias_kq(solved, q, a.tol),
        None => mean_field::critical_bias_k(solved, a.tol),
    }
    .map_err(|e| Failure::Runtime(e.into()))?;
    Ok(json!({
        "schema": SCHEMA_VERSION,
        "k": a.k,
        "solved_k": solved,
        "q": values.q,
        "p_star_k": values.p_star_k,
        "p_star_kq": values.p_star_kq,
        "tolerance": values.tolerance,
    }))
}

fn dynamics_params(a: &DynamicsArgs, max_rounds: u64) -> Result<DynamicsParams, Failure> {
    DynamicsParams::new(a.family, a.k, a.p, a.mode, a.seed, max_rounds).map_err(usage)
}

fn load_graph(spec: &GraphSpec) -> Result<biasmaj_core::Graph, Failure> {
    build_graph(spec)
        .with_context(|| format!("building graph {spec}"))
        .map_err(Failure::Runtime)
}

fn simulate(a: SimulateArgs, stderr: &mut dyn Write) -> Result<Value, Failure> {
    dynamics_params(&a.dynamics, 0)?;
    check_unit("q", a.q)?;
    let graph = load_graph(&a.dynamics.graph)?;
    let density = density_report(&graph);
    if density.sparse_warning {
        let _ = writeln!(
            stderr,
            "warning: minimum degree {} is below 4 ln n = {:.1}; the graph may be too sparse",
            density.min_degree,
            4.0 * density.log_n
        );
    }
    let max_rounds = a.max_rounds.unwrap_or_else(|| default_max_rounds(graph.node_count()));
    let params = dynamics_params(&a.dynamics, max_rounds)?;
    let config0 = init_random(&graph, a.q, params.seed).map_err(usage)?;
    let detail = if a.trace.is_some() { Detail::Full } else { Detail::Summary };
    let (record, _) = par_run(&graph, &config0, &params, detail);
    if let Some(path) = &a.trace {
        write_trace(path, &record).map_err(Failure::Runtime)?;
    }
    Ok(json!({
        "schema": SCHEMA_VERSION,
        "graph": a.dynamics.graph.to_string(),
        "graph_seed": a.dynamics.graph.seed,
        "n": graph.node_count(),
        "family": params.family,
        "k": (params.family == Family::KMajority).then_some(params.k),
        "p": params.p,
        "mode": params.mode,
        "q": a.q,
        "seed": params.seed,
        "max_rounds": max_rounds,
        "tau": record.tau,
        "censored": record.censored,
        "rounds": record.rounds,
        "final_r_fraction": record.final_r_fraction(),
        "trajectory": record.trajectory,
        "density": density,
    }))
}

fn write_trace(path: &Path, record: &biasmaj_core::RunRecord) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(["schema", "round", "r_fraction", "phi_min", "phi_mean", "phi_max"])?;
    let phi = record.phi.as_deref().unwrap_or(&[]);
    for (t, r) in record.trajectory.iter().enumerate() {
        let mut row = vec![SCHEMA_VERSION.to_string(), t.to_string(), g17(*r)];
        if let Some(s) = phi.get(t) {
            row.extend([g17(s.min), g17(s.mean), g17(s.max)]);
        } else {
            row.extend([String::new(), String::new(), String::new()]);
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<Value, Failure> {
    let text = fs::read_to_string(&a.config)
        .with_context(|| format!("reading {}", a.config.display()))
        .map_err(Failure::Runtime)?;
    let spec = SweepSpec::from_json(&text).map_err(usage)?;
    let out = match (&a.out, &spec.out) {
        (Some(dir), _) => dir.clone(),
        (None, Some(dir)) => a.config.parent().unwrap_or(Path::new(".")).join(dir),
        (None, None) => return Err(Failure::Usage("no output directory: set `out` in the config or pass --out".into())),
    };
    let result = experiments::run_sweep(&spec).map_err(|e| match e {
        e @ ExperimentError::Schema { .. } => usage(e),
        e => Failure::Runtime(e.into()),
    })?;
    experiments::write_outputs(&result, &out).map_err(|e| Failure::Runtime(e.into()))?;
    Ok(json!({
        "schema": SCHEMA_VERSION,
        "runs": out.join("runs.csv"),
        "summary": out.join("summary.json"),
        "cells": result.cells.len(),
        "rows": result.rows.len(),
        "curves": result.curves,
    }))
}

fn compare(a: CompareArgs) -> Result<Value, Failure> {
    let params = dynamics_params(&a.dynamics, a.rounds as u64)?;
    if params.family == Family::DeterministicMajority {
        return Err(Failure::Usage("deterministic majority has no mean-field map to compare against".into()));
    }
    check_unit("q0", a.q0)?;
    if !(a.gamma >= 0.0) {
        return Err(Failure::Usage(format!("--gamma {} must be non-negative", a.gamma)));
    }
    let graph = load_graph(&a.dynamics.graph)?;
    let report = experiments::meanfield_comparison(&graph, &params, a.q0, a.rounds, a.gamma)
        .map_err(|e| Failure::Runtime(e.into()))?;
    Ok(serde_json::to_value(report).expect("json"))
}

fn graphgen(a: GraphgenArgs) -> Result<Value, Failure> {
    let mut spec = a.spec;
    if matches!(spec.kind, GraphKind::File { .. }) {
        return Err(Failure::Usage("graphgen needs a generated graph kind, not file:".into()));
    }
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    let graph = load_graph(&spec)?;
    edge_list::save(&graph, &a.out).map_err(|e| Failure::Runtime(e.into()))?;
    Ok(json!({
        "schema": SCHEMA_VERSION,
        "spec": spec.to_string(),
        "seed": spec.seed,
        "out": a.out,
        "n": graph.node_count(),
        "edges": graph.edge_count(),
        "density": density_report(&graph),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_cli(std::iter::once("biasmaj").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_two_with_json() {
        for args in [
            &["meanfield", "--k", "3"][..],
            &["meanfield", "--k", "3", "--p", "2"],
            &["meanfield", "--k", "3", "--p", "0.1", "--bogus"],
            &["critical", "--k", "3", "--q", "0.4"],
            &["simulate", "--graph", "complete:n=10", "--family", "det", "--k", "3", "--p", "0.1"],
            &["simulate", "--graph", "ring:n=10", "--p", "0.1"],
        ] {
            let (code, _, err) = run(args);
            assert_eq!(code, 2, "{args:?}");
            let v: Value = serde_json::from_str(err.trim()).unwrap();
            assert_eq!(v["error"]["kind"], "usage");
        }
    }

    #[test]
    fn help_lists_defaults() {
        let (code, out, _) = run(&["compare", "--help"]);
        assert_eq!(code, 0);
        for flag in ["--graph", "--family", "--k", "--p", "--mode", "--q0", "--rounds", "--gamma", "--seed"] {
            assert!(out.contains(flag), "{flag}");
        }
        assert!(out.contains("[default: 0.02]") && out.contains("[default: kmaj]"));
    }
}
