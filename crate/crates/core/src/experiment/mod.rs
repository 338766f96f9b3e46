//! Seeded experiment harness: trials, aggregation, scans, and file output.

mod config;
mod output;
mod stats;
mod sweep;
mod trial;

pub use config::{ExperimentConfig, HacSettings, ScanConfig, ScanKind};
pub use output::{
    emit_csv, emit_plot, write_compare, write_experiment, write_scan, AggregateRow, RawRow, SummaryRow,
};
pub use stats::{
    aggregate, band_overlap_fraction, epochs_to_threshold, final_success, quantile, spearman,
    CurveAggregate, EpochSummary,
};
pub use sweep::{compare, compare_conditions, run_scan, Condition, ScanPoint};
pub use trial::{
    evaluate, run_experiment, run_many, run_trial, run_trial_with_agent, ExperimentResult, Learner,
    ScriptedAgent, TrialAgent, TrialResult,
};
