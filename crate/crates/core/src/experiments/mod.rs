//! Seeded experiments, configuration files and output formats.

pub mod config;
pub mod output;
pub mod plan;
pub mod rng;

pub use output::{
    ratio_table, read_ratio_csv, read_ratio_json, write_outcome, Metadata, OutputFormat, RatioRow,
};
pub use plan::{
    median, quantile, run_plan, CheckpointRecord, CheckpointSummary, ExperimentPlan, Fibre,
    PlanOutcome, PlanTheorem, TrialRecord,
};
