use ndarray::Array2;
use rand::Rng;

use crate::error::{Error, Result};

/// One environment step as stored for learning. Observations are not
/// stored; they are recomputed from `state` when a batch is built.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    /// Joint action, agent-major, two components per agent.
    pub actions: Vec<f64>,
    pub reward: f64,
    /// Per-agent intrinsic reward, before weighting.
    pub intrinsic: Vec<f64>,
    pub next_state: Vec<f64>,
    pub done: bool,
    /// Goal in force when the action was taken.
    pub goal: Vec<f64>,
    pub episode: u64,
    /// Step index of `state` within its episode.
    pub step: usize,
}

/// Ring buffer of transitions addressed by a global push counter.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    slots: Vec<Transition>,
    capacity: usize,
    pushed: u64,
    horizon: usize,
    valid_starts: usize,
}

/// A batch of `(s_t, s_{t+c})` rows with the push indices they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonBatch {
    pub states: Array2<f64>,
    pub futures: Array2<f64>,
    pub pairs: Vec<(u64, u64)>,
}

impl ReplayBuffer {
    /// `horizon` is the gap `c` used for pair sampling.
    pub fn new(capacity: usize, horizon: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("replay capacity must be positive".into()));
        }
        if horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        Ok(Self {
            slots: Vec::new(),
            capacity,
            pushed: 0,
            horizon,
            valid_starts: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Number of stored transitions that start a legal horizon pair.
    pub fn valid_pair_count(&self) -> usize {
        self.valid_starts
    }

    fn oldest(&self) -> u64 {
        self.pushed - self.slots.len() as u64
    }

    /// Transition by global push index, if still stored.
    pub fn get(&self, seq: u64) -> Option<&Transition> {
        if seq < self.oldest() || seq >= self.pushed {
            return None;
        }
        Some(&self.slots[(seq % self.capacity as u64) as usize])
    }

    /// Whether `seq` and `seq + c` are both stored and `c` steps apart in one episode.
    pub fn is_valid_start(&self, seq: u64) -> bool {
        let c = self.horizon;
        match (self.get(seq), self.get(seq + c as u64)) {
            (Some(a), Some(b)) => a.episode == b.episode && b.step == a.step + c,
            _ => false,
        }
    }

    pub fn push(&mut self, t: Transition) {
        if self.slots.len() == self.capacity {
            let old = self.oldest();
            if self.is_valid_start(old) {
                self.valid_starts -= 1;
            }
            let slot = (self.pushed % self.capacity as u64) as usize;
            self.slots[slot] = t;
        } else {
            self.slots.push(t);
        }
        self.pushed += 1;
        let newest = self.pushed - 1;
        if newest >= self.horizon as u64 && self.is_valid_start(newest - self.horizon as u64) {
            self.valid_starts += 1;
        }
    }

    /// Uniform draw with replacement; `None` when empty.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Option<Vec<&Transition>> {
        if self.is_empty() {
            return None;
        }
        let base = self.oldest();
        Some(
            (0..n)
                .map(|_| {
                    self.get(base + rng.gen_range(0..self.len() as u64))
                        .expect("stored")
                })
                .collect(),
        )
    }

    /// `n` pairs drawn uniformly among legal in-episode pairs exactly `c`
    /// steps apart. `None` means no legal pair is stored yet.
    pub fn sample_horizon_pairs<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Option<HorizonBatch> {
        if self.valid_starts == 0 || n == 0 {
            return None;
        }
        let base = self.oldest();
        let len = self.len() as u64;
        let mut starts = Vec::with_capacity(n);
        let budget = 64 * n;
        let mut tries = 0;
        while starts.len() < n && tries < budget {
            let seq = base + rng.gen_range(0..len);
            if self.is_valid_start(seq) {
                starts.push(seq);
            }
            tries += 1;
        }
        if starts.len() < n {
            // Sparse legal pairs: fall back to drawing from the explicit list.
            let legal: Vec<u64> = (base..self.pushed).filter(|&s| self.is_valid_start(s)).collect();
            while starts.len() < n {
                starts.push(legal[rng.gen_range(0..legal.len())]);
            }
        }
        let dim = self.get(starts[0]).expect("stored").state.len();
        let mut states = Array2::zeros((n, dim));
        let mut futures = Array2::zeros((n, dim));
        let c = self.horizon as u64;
        let mut pairs = Vec::with_capacity(n);
        for (j, &s) in starts.iter().enumerate() {
            let a = self.get(s).expect("stored");
            let b = self.get(s + c).expect("stored");
            states.row_mut(j).assign(&ndarray::ArrayView1::from(&a.state));
            futures.row_mut(j).assign(&ndarray::ArrayView1::from(&b.state));
            pairs.push((s, s + c));
        }
        Some(HorizonBatch {
            states,
            futures,
            pairs,
        })
    }
}
