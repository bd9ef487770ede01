//! Batch driver: configuration, the staged pipeline and run comparison.

pub mod compare;
pub mod config;
pub mod pipeline;

pub use compare::{compare, compare_curves, load_runs, Comparison, Curve, PairDifference};
pub use config::PipelineConfig;
pub use pipeline::{run_pipeline, PipelineRun, Report, Stage};
