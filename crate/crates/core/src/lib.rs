//! Biased k-majority dynamics on dense graphs.
//!
//! This crate is `no_std` (with `alloc`) and holds everything that is pure
//! computation:
//!
//! * [`binomial`]: exact binomial pmf and tail evaluation.
//! * [`mean_field`]: the mean-field maps for the edge-bias and node-bias
//!   processes, their derivatives, fixed points and critical bias values.
//! * [`graph`]: simple undirected graphs, generators and density diagnostics.
//! * [`dynamics`]: the synchronous round engine and disruption detection.
//! * [`stats`]: the two-sample tests used to compare simulation outcomes.
//!
//! File formats, sweeps and the command line live in the `biasmaj` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod binomial;
pub mod dynamics;
pub mod graph;
pub mod mean_field;
pub mod rng;
pub mod stats;

mod bisect;

pub use dynamics::{
    init_random, phi_stats, run, step, Configuration, Detail, DynamicsError, DynamicsParams,
    Family, PhiStats, RunRecord, State,
};
pub use graph::{density_report, generate, DensityReport, Graph, GraphError, GraphKind, GraphSpec};
pub use mean_field::{
    BiasMode, CriticalValues, FixedPointSet, MeanFieldError, MeanFieldParams, Regime, Trajectory,
};
