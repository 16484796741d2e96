//! Training orchestration: replay with horizon-pair sampling, the
//! interleaved update loop, evaluation, ablations and goal inspection.
//!
//! Per environment step: pick a goal (per the refresh period), act, step the
//! world, store the transition with its external and intrinsic rewards.
//! After warmup every step also updates the goal critic, the goal actor
//! (deterministic strategy only) and each agent, and the CVAE every
//! `cvae_period` steps.

mod ablation;
mod config;
mod metrics;
mod models;
mod replay;
mod run;

pub use ablation::{
    run_ablation, run_one, write_ablation_csv, AblationAxis, AblationRun, AblationSummaryRow,
};
pub use config::{Backbone, RunConfig};
pub use metrics::{write_metrics_csv, write_timing_csv, MetricsRow, TimingRow};
pub use models::{stream_rng, Models, Stream};
pub use replay::{HorizonBatch, ReplayBuffer, Transition};
pub use run::{
    eval_seed, evaluate, evaluate_models, inspect_goals, train, train_with, write_goals_csv, EvalStats,
    GoalRow, PairAudit, TrainOutput, Trainer,
};
