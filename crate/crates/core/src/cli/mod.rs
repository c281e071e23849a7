//! Experiment driver behind the `chanelim` binary: file formats, configs, sweeps,
//! reports and the self-check.

pub mod config;
pub mod experiment;
pub mod io;
pub mod report;
pub mod verify;
