//! Fixtures shared by the criterion benches.

use magi_core::envs::Task;
use magi_core::trainer::{Backbone, RunConfig, Trainer};

/// Navigation run with default network sizes and a short warmup.
pub fn nav_config(backbone: Backbone) -> RunConfig {
    RunConfig {
        task: Task::Navigation,
        backbone,
        warmup: 300,
        total_steps: u64::MAX,
        eval_period: u64::MAX,
        ..RunConfig::default()
    }
}

/// A trainer already past warmup, so every further step updates all networks.
pub fn warm_trainer(backbone: Backbone) -> Trainer {
    let cfg = nav_config(backbone);
    let warmup = cfg.warmup;
    let mut t = Trainer::new(cfg).expect("valid config");
    while t.steps() <= warmup {
        t.step().expect("step");
    }
    t
}
