//! Experiment harness for the spectral-clipping optimizer stack: config
//! parsing, the experiment suites, the reference-optimum oracle, and CSV
//! metric emission.

pub mod config;
pub mod experiments;
pub mod fstar;
pub mod metrics;
