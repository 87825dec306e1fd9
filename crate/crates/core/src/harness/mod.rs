//! Experiment orchestration: the training loop, baseline evaluation, the
//! ablation ladder, statistics and exports.

mod ablation;
mod config;
pub mod export;
mod runner;
mod scenario;
pub mod stats;
pub mod toy;

pub use ablation::{ablation_suite, format_table, AblationResult, AblationRow};
pub use config::{BaselineParams, ControllerKind, ExperimentConfig, FlowKind, ScenarioConfig, TrainConfig};
pub use export::{export_records, export_run, load_records, summarize, Manifest, SummaryRow};
pub use runner::{
    baseline_controller, evaluate_controller, mean, run_controller_episode, run_seed, run_training, EpisodeMode,
    EpisodeRecord, EpisodeTrace, Learner, MtLossRecord, RunRecord,
};
pub use scenario::Scenario;
pub use stats::{phase_distribution, TurningCounts};
