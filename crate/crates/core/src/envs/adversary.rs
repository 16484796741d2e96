//! Fixed opponents for predator-prey (prey) and keep-away (theft).

use super::{StateLayout, Task, WorldConfig};
use crate::error::{check_len, Error, Result};
use crate::nn::ParamSet;

/// Distance from a wall at which the wall-avoidance push starts.
const WALL_MARGIN: f64 = 0.2;
const WALL_GAIN: f64 = 2.0;

/// Opponent controller: the scripted heuristic, or a network mapping the
/// global state to a `tanh`-bounded 2-D action.
#[derive(Debug, Clone, Default, PartialEq)]
pub enum AdversaryPolicy {
    #[default]
    Scripted,
    Network(ParamSet),
}

impl AdversaryPolicy {
    pub fn act(&self, config: &WorldConfig, state: &[f64]) -> Result<[f64; 2]> {
        match self {
            AdversaryPolicy::Scripted => scripted_adversary(config, state),
            AdversaryPolicy::Network(net) => {
                if !config.task.has_adversary() {
                    return Err(Error::NoAdversary(config.task.to_string()));
                }
                let out = net.forward(state)?;
                check_len("adversary network output", 2, out.len())?;
                Ok([out[0].clamp(-1.0, 1.0), out[1].clamp(-1.0, 1.0)])
            }
        }
    }
}

fn unit(dx: f64, dy: f64) -> [f64; 2] {
    let n = dx.hypot(dy);
    if n > 0.0 {
        [dx / n, dy / n]
    } else {
        [0.0, 0.0]
    }
}

fn wall_push(config: &WorldConfig, pos: [f64; 2]) -> [f64; 2] {
    let inner = config.arena - WALL_MARGIN;
    let mut push = [0.0; 2];
    for k in 0..2 {
        if pos[k] > inner {
            push[k] -= (pos[k] - inner) / WALL_MARGIN;
        } else if pos[k] < -inner {
            push[k] += (-inner - pos[k]) / WALL_MARGIN;
        }
    }
    push
}

fn squash(a: [f64; 2]) -> [f64; 2] {
    let n = a[0].hypot(a[1]);
    if n > 1.0 {
        [a[0] / n, a[1] / n]
    } else {
        a
    }
}

/// Index and distance of the agent closest to `pos`; ties go to the lower index.
fn nearest_agent(layout: &StateLayout, state: &[f64], pos: [f64; 2]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for i in 0..layout.n_agents {
        let a = layout.agent(i);
        let d = (state[a] - pos[0]).hypot(state[a + 1] - pos[1]);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn flee(config: &WorldConfig, layout: &StateLayout, state: &[f64], pos: [f64; 2]) -> [f64; 2] {
    let (i, _) = nearest_agent(layout, state, pos);
    let a = layout.agent(i);
    let away = unit(pos[0] - state[a], pos[1] - state[a + 1]);
    let wall = wall_push(config, pos);
    squash([away[0] + WALL_GAIN * wall[0], away[1] + WALL_GAIN * wall[1]])
}

/// Deterministic heuristic opponent.
///
/// The prey runs directly away from the nearest predator, bent inwards near
/// walls. The theft heads for the nearest uncollected treasure (lowest index on
/// ties) unless a guard is inside the threat radius, in which case it flees.
pub fn scripted_adversary(config: &WorldConfig, state: &[f64]) -> Result<[f64; 2]> {
    let layout = StateLayout::new(config);
    let Some(o) = layout.adversary() else {
        return Err(Error::NoAdversary(config.task.to_string()));
    };
    check_len("global state", layout.len(), state.len())?;
    let pos = [state[o], state[o + 1]];
    match config.task {
        Task::PredatorPrey => Ok(flee(config, &layout, state, pos)),
        Task::KeepAway => {
            let (_, guard_dist) = nearest_agent(&layout, state, pos);
            if guard_dist < config.threat_radius {
                return Ok(flee(config, &layout, state, pos));
            }
            let mut target: Option<(usize, f64)> = None;
            for k in 0..layout.n_landmarks {
                if layout.flag(k).is_some_and(|f| state[f] > 0.5) {
                    continue;
                }
                let l = layout.landmark(k);
                let d = (state[l] - pos[0]).hypot(state[l + 1] - pos[1]);
                if target.is_none_or(|(_, best)| d < best) {
                    target = Some((k, d));
                }
            }
            Ok(match target {
                Some((k, _)) => {
                    let l = layout.landmark(k);
                    unit(state[l] - pos[0], state[l + 1] - pos[1])
                }
                None => [0.0, 0.0],
            })
        }
        _ => Err(Error::NoAdversary(config.task.to_string())),
    }
}
