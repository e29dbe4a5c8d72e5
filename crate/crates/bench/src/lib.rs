//! Experiment driver for the `hsim` eigensolver: config-driven tables,
//! tolerance studies, plotting and the `hsim-bench` command line.

pub mod cli;
pub mod config;
pub mod experiment;
pub mod plot;
pub mod run;
pub mod tolerance;
