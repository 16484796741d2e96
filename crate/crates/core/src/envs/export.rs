use std::io::Write;

use serde::Serialize;

use super::{StateLayout, WorldConfig};
use crate::error::Result;

/// One entity at one step, for trajectory inspection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub episode: usize,
    pub step: usize,
    pub entity: String,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub reward: f64,
    pub flags: f64,
}

impl TrajectoryRow {
    /// Expands a global state into one row per entity.
    pub fn from_state(
        config: &WorldConfig,
        episode: usize,
        step: usize,
        state: &[f64],
        reward: f64,
    ) -> Vec<TrajectoryRow> {
        let l = StateLayout::new(config);
        let mut rows = Vec::new();
        let mut push = |entity: String, o: usize, moving: bool, flags: f64| {
            rows.push(TrajectoryRow {
                episode,
                step,
                entity,
                x: state[o],
                y: state[o + 1],
                vx: if moving { state[o + 2] } else { 0.0 },
                vy: if moving { state[o + 3] } else { 0.0 },
                reward,
                flags,
            })
        };
        for i in 0..l.n_agents {
            push(format!("agent{i}"), l.agent(i), true, 0.0);
        }
        for k in 0..l.n_landmarks {
            let flag = l.flag(k).map_or(0.0, |f| state[f]);
            push(format!("landmark{k}"), l.landmark(k), false, flag);
        }
        if let Some(o) = l.adversary() {
            push("adversary".into(), o, true, 0.0);
        }
        rows
    }
}

pub fn write_trajectory_csv<W: Write>(w: W, rows: &[TrajectoryRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}
