//! Metrics, baselines and experiment tables.

mod experiment;
mod metrics;
mod report;

pub use experiment::{
    run_experiment, run_on, split_name, AttackSpec, ExperimentDescriptor, ReportRow, VictimSpec, CLEAN,
};
pub use metrics::{
    asr, clipped_noise, evaluate, evaluate_noisy, noise_baseline, perturbed_predictions, rca_bca,
    spr_db, spr_db_from, target_rate, Accuracy, EvalReport, PlacementPolicy,
};
pub use report::{report_csv, report_json, write_report, CSV_HEADER};
