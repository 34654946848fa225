//! Experiment runner and diagnostics for the active-search engines.
//!
//! Recall experiments replay the query loop against ground-truth labels.
//! Alongside them sit the pairwise probe, the block-structure bound checker
//! and a scaling benchmark.

pub mod bench;
pub mod config;
pub mod error;
pub mod experiment;
pub mod lemma;
pub mod probe;
pub mod report;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use experiment::{run_experiment, RecallCurve, Summary};
