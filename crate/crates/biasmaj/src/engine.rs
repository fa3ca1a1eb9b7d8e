//! Rounds with the node updates spread over the rayon pool.
//!
//! Each node draws from its own substream, so these produce exactly the
//! configurations of the sequential engine in `biasmaj_core::dynamics`.

use biasmaj_core::dynamics::{self, round_streams, update_node, run_using};
use biasmaj_core::{Configuration, Detail, DynamicsParams, Graph, RunRecord};
use rayon::prelude::*;

/// Below this node count the sequential step is used.
const PARALLEL_MIN_NODES: usize = 4096;

pub fn par_step(graph: &Graph, config: &Configuration, params: &DynamicsParams) -> Configuration {
    let n = graph.node_count();
    if n < PARALLEL_MIN_NODES || rayon::current_num_threads() == 1 {
        return dynamics::step(graph, config, params);
    }
    let streams = round_streams(params, config);
    let states = (0..n)
        .into_par_iter()
        .map(|u| update_node(graph, config, params, &streams, u))
        .collect();
    config.advanced(graph, states)
}

pub fn par_run(
    graph: &Graph,
    config0: &Configuration,
    params: &DynamicsParams,
    detail: Detail,
) -> (RunRecord, Configuration) {
    run_using(graph, config0, params, detail, par_step)
}
