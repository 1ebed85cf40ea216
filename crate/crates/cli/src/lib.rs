//! Experiment harness for the variational Lanczos propagators: run
//! configuration, presets, trajectory runs with reference checkpoints,
//! paired comparisons and the dense-oracle suite.

pub mod compare;
pub mod config;
pub mod oracle;
pub mod presets;
pub mod run;

pub use compare::{run_comparison, ComparisonReport};
pub use config::{Method, RunConfig};
pub use oracle::{run_oracle_suite, run_oracle_suite_with, OracleOptions, OracleReport};
pub use presets::{preset, presets, Preset};
pub use run::{loglog_slope, run_propagation, write_outputs, ErrorSample, MatvecLedger, RunRecord};
