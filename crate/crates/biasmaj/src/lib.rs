//! Std companion to `biasmaj-core`: edge-list files, parallel rounds,
//! parameter sweeps, mean-field comparisons and the `biasmaj` command line.

pub mod cli;
pub mod edge_list;
pub mod engine;
pub mod experiments;
pub mod format;

pub use biasmaj_core as core;
