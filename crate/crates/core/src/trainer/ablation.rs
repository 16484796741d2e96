use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

use super::run::{eval_seed, evaluate_models};
use super::{MetricsRow, Models, RunConfig, Trainer};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AblationAxis {
    SampleSize,
    Horizon,
}

impl AblationAxis {
    pub fn name(self) -> &'static str {
        match self {
            AblationAxis::SampleSize => "sample_size",
            AblationAxis::Horizon => "horizon",
        }
    }

    pub fn apply(self, cfg: &mut RunConfig, value: usize) {
        match self {
            AblationAxis::SampleSize => cfg.samples = value,
            AblationAxis::Horizon => cfg.horizon = value,
        }
    }
}

impl std::str::FromStr for AblationAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sample_size" | "samples" | "m" => Ok(Self::SampleSize),
            "horizon" | "c" => Ok(Self::Horizon),
            other => Err(Error::Config(format!("unknown ablation axis `{other}`"))),
        }
    }
}

/// One `(value, seed)` cell of an ablation.
#[derive(Debug, Clone)]
pub struct AblationRun {
    pub value: usize,
    pub seed: u64,
    pub config: RunConfig,
    pub metrics: Vec<MetricsRow>,
    /// Evaluation return of the final networks.
    pub final_return: f64,
    pub n_critics: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationSummaryRow {
    pub axis: &'static str,
    pub value: usize,
    pub seed: u64,
    pub final_return: f64,
}

/// Trains and evaluates one run per `(value, seed)`; seeds come from the
/// base config and are shared by every value. Runs execute in parallel;
/// results come back ordered by value, then seed.
pub fn run_ablation(base: &RunConfig, axis: AblationAxis, values: &[usize]) -> Result<Vec<AblationRun>> {
    if values.is_empty() {
        return Err(Error::Config("ablation needs at least one value".into()));
    }
    let cells: Vec<(usize, u64)> = values
        .iter()
        .flat_map(|&v| base.seed_list().into_iter().map(move |s| (v, s)))
        .collect();
    cells
        .par_iter()
        .map(|&(value, seed)| {
            let mut cfg = base.clone();
            axis.apply(&mut cfg, value);
            cfg.seed = seed;
            cfg.seeds.clear();
            run_one(cfg).map(|(metrics, final_return, n_critics, config)| AblationRun {
                value,
                seed,
                config,
                metrics,
                final_return,
                n_critics,
            })
        })
        .collect()
}

/// Trains `cfg` and evaluates the final networks on the run's eval episodes.
pub fn run_one(cfg: RunConfig) -> Result<(Vec<MetricsRow>, f64, usize, RunConfig)> {
    let mut t = Trainer::new(cfg.clone())?;
    let mut metrics = Vec::new();
    while t.steps() < cfg.total_steps {
        if let Some((row, _)) = t.step()? {
            metrics.push(row);
        }
    }
    let models: Models = t.into_models();
    let eval = evaluate_models(&models, &cfg, cfg.eval_episodes, eval_seed(cfg.seed))?;
    Ok((metrics, eval.mean, models.n_critics(), cfg))
}

pub fn write_ablation_csv<W: Write>(w: W, axis: AblationAxis, runs: &[AblationRun]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in runs {
        out.serialize(AblationSummaryRow {
            axis: axis.name(),
            value: r.value,
            seed: r.seed,
            final_return: r.final_return,
        })?;
    }
    out.flush()?;
    Ok(())
}
