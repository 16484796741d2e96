use std::io::Write;

use serde::Serialize;

use crate::error::Result;

/// One evaluation point. Missing values (no episode finished, no update
/// yet) are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub step: u64,
    /// Mean external return of the noise-free evaluation episodes.
    pub eval_return: f64,
    pub eval_return_std: f64,
    /// Mean external return of training episodes finished since the last row.
    pub train_return: f64,
    pub intrinsic_mean: f64,
    pub cvae_loss: f64,
    pub goal_critic_loss: f64,
    /// One entry per learner.
    pub critic_loss: Vec<f64>,
}

impl MetricsRow {
    pub fn header(n_critics: usize) -> Vec<String> {
        let mut h: Vec<String> = [
            "step",
            "eval_return",
            "eval_return_std",
            "train_return",
            "intrinsic_mean",
            "cvae_loss",
            "goal_critic_loss",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        h.extend((0..n_critics).map(|i| format!("critic_loss_{i}")));
        h
    }

    fn record(&self) -> Vec<String> {
        let mut r = vec![self.step.to_string()];
        for v in [
            self.eval_return,
            self.eval_return_std,
            self.train_return,
            self.intrinsic_mean,
            self.cvae_loss,
            self.goal_critic_loss,
        ]
        .iter()
        .chain(&self.critic_loss)
        {
            r.push(v.to_string());
        }
        r
    }
}

pub fn write_metrics_csv<W: Write>(w: W, n_critics: usize, rows: &[MetricsRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(MetricsRow::header(n_critics))?;
    for r in rows {
        out.write_record(r.record())?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingRow {
    pub step: u64,
    pub wall_seconds: f64,
}

pub fn write_timing_csv<W: Write>(w: W, rows: &[TimingRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}
