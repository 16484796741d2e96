use std::ops::{Deref, DerefMut};

use super::{Task, WorldConfig};
use crate::error::{Error, Result};

/// Flat real vector describing every entity at one step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GlobalState(pub Vec<f64>);

impl Deref for GlobalState {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for GlobalState {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for GlobalState {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Offsets of each entity block inside a [`GlobalState`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateLayout {
    pub n_agents: usize,
    pub n_landmarks: usize,
    pub landmark_stride: usize,
    pub has_adversary: bool,
}

impl StateLayout {
    pub fn new(config: &WorldConfig) -> Self {
        Self::for_task(config.task, config.n_agents, config.n_landmarks)
    }

    pub fn for_task(task: Task, n_agents: usize, n_landmarks: usize) -> Self {
        Self {
            n_agents,
            n_landmarks,
            landmark_stride: if task.has_flags() { 3 } else { 2 },
            has_adversary: task.has_adversary(),
        }
    }

    #[inline]
    pub fn agent(&self, i: usize) -> usize {
        4 * i
    }

    #[inline]
    pub fn landmark(&self, k: usize) -> usize {
        4 * self.n_agents + self.landmark_stride * k
    }

    /// Offset of landmark `k`'s collected flag, if the task has flags.
    #[inline]
    pub fn flag(&self, k: usize) -> Option<usize> {
        (self.landmark_stride == 3).then(|| self.landmark(k) + 2)
    }

    #[inline]
    pub fn adversary(&self) -> Option<usize> {
        self.has_adversary
            .then(|| 4 * self.n_agents + self.landmark_stride * self.n_landmarks)
    }

    pub fn len(&self) -> usize {
        4 * self.n_agents + self.landmark_stride * self.n_landmarks + if self.has_adversary { 4 } else { 0 }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of agents whose coordinates fit in a vector of length `len`.
    fn check_agent(&self, index: usize, len: usize) -> Result<()> {
        if index >= self.n_agents || 4 * index + 2 > len {
            return Err(Error::IndexOutOfRange {
                what: "agent",
                index,
                len: self.n_agents,
            });
        }
        Ok(())
    }
}

/// The `(x, y)` slice of agent `index`, for real states and decoded goals alike.
pub fn extract_agent_position(layout: &StateLayout, state: &[f64], index: usize) -> Result<[f64; 2]> {
    layout.check_agent(index, state.len())?;
    let o = layout.agent(index);
    Ok([state[o], state[o + 1]])
}

pub fn set_agent_position(
    layout: &StateLayout,
    state: &mut [f64],
    index: usize,
    pos: [f64; 2],
) -> Result<()> {
    layout.check_agent(index, state.len())?;
    let o = layout.agent(index);
    state[o] = pos[0];
    state[o + 1] = pos[1];
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn navigation_state_length() {
        let l = StateLayout::new(&WorldConfig::for_task(Task::Navigation));
        assert_eq!(l.len(), 3 * 4 + 3 * 2);
        assert_eq!(l.adversary(), None);
        assert_eq!(l.flag(0), None);
    }

    #[test]
    fn adversarial_layouts() {
        let pp = StateLayout::new(&WorldConfig::for_task(Task::PredatorPrey));
        assert_eq!(pp.len(), 16);
        assert_eq!(pp.adversary(), Some(12));
        let ka = StateLayout::new(&WorldConfig::for_task(Task::KeepAway));
        assert_eq!(ka.len(), 12 + 9 + 4);
        assert_eq!(ka.flag(1), Some(12 + 3 + 2));
    }

    #[test]
    fn position_set_extract_round_trip() {
        let l = StateLayout::new(&WorldConfig::for_task(Task::Navigation));
        let mut s = vec![0.0; l.len()];
        set_agent_position(&l, &mut s, 0, [0.3, -0.2]).unwrap();
        assert_eq!(extract_agent_position(&l, &s, 0).unwrap(), [0.3, -0.2]);
        set_agent_position(&l, &mut s, 2, [-0.9, 0.1]).unwrap();
        assert_eq!(&s[8..10], &[-0.9, 0.1]);
        assert!(extract_agent_position(&l, &s, 3).is_err());
    }
}
