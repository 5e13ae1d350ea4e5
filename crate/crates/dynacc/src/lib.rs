//! File formats, parallel execution and the `dynacc` command-line tool.
//!
//! The algorithms live in [`dynacc_core`]; this crate reads the CSV and
//! GeoJSON inputs, runs the pipeline on a rayon pool and writes the
//! artifact set.

pub mod cli;
pub mod config;
pub mod exec;
pub mod fixture;
pub mod input;
pub mod output;
pub mod pipeline;

pub use dynacc_core as core;
