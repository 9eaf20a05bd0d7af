//! Configuration, persistence, experiment drivers and reporting.

pub mod cli;
pub mod config;
pub mod dataset;
pub mod pipeline;
pub mod render;

pub use config::{apply_override, DataConfig, EvalConfig, ExperimentConfig, MeshSpec, SolverConfig, OUTPUT_DIR_ENV};
pub use dataset::Dataset;
pub use pipeline::*;
