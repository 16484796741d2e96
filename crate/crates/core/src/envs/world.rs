use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{reward_for, AdversaryPolicy, GlobalState, StateLayout, StepEvents, WorldConfig};
use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub state: GlobalState,
    pub observations: Vec<Vec<f64>>,
    /// Shared by every agent.
    pub reward: f64,
    pub events: StepEvents,
    pub terminal: bool,
}

/// Random initial state: every entity uniform in the arena, at rest, flags cleared.
pub fn reset(config: &WorldConfig, seed: u64) -> (GlobalState, Vec<Vec<f64>>) {
    let layout = StateLayout::new(config);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = vec![0.0; layout.len()];
    let a = config.arena;
    let mut place = |s: &mut [f64], o: usize| {
        s[o] = rng.gen_range(-a..=a);
        s[o + 1] = rng.gen_range(-a..=a);
    };
    for i in 0..layout.n_agents {
        place(&mut s, layout.agent(i));
    }
    for k in 0..layout.n_landmarks {
        place(&mut s, layout.landmark(k));
    }
    if let Some(o) = layout.adversary() {
        place(&mut s, o);
    }
    let obs = (0..layout.n_agents)
        .map(|i| observe_unchecked(&layout, &s, i))
        .collect();
    (GlobalState(s), obs)
}

pub fn observation_len(config: &WorldConfig) -> usize {
    let l = StateLayout::new(config);
    4 + l.landmark_stride * l.n_landmarks + 2 * (l.n_agents - 1) + if l.has_adversary { 4 } else { 0 }
}

/// Local observation of agent `index` (layout documented at module level).
pub fn observe(config: &WorldConfig, state: &[f64], index: usize) -> Result<Vec<f64>> {
    let layout = StateLayout::new(config);
    check_len("global state", layout.len(), state.len())?;
    if index >= layout.n_agents {
        return Err(Error::IndexOutOfRange {
            what: "agent",
            index,
            len: layout.n_agents,
        });
    }
    Ok(observe_unchecked(&layout, state, index))
}

fn observe_unchecked(layout: &StateLayout, s: &[f64], index: usize) -> Vec<f64> {
    let me = layout.agent(index);
    let (x, y) = (s[me], s[me + 1]);
    let mut obs = Vec::with_capacity(s.len());
    obs.extend_from_slice(&s[me..me + 4]);
    for k in 0..layout.n_landmarks {
        let l = layout.landmark(k);
        match layout.flag(k) {
            Some(f) if s[f] > 0.5 => obs.extend_from_slice(&[0.0, 0.0, 1.0]),
            Some(_) => obs.extend_from_slice(&[s[l] - x, s[l + 1] - y, 0.0]),
            None => obs.extend_from_slice(&[s[l] - x, s[l + 1] - y]),
        }
    }
    for j in (0..layout.n_agents).filter(|&j| j != index) {
        let o = layout.agent(j);
        obs.extend_from_slice(&[s[o] - x, s[o + 1] - y]);
    }
    if let Some(o) = layout.adversary() {
        obs.extend_from_slice(&[s[o] - x, s[o + 1] - y, s[o + 2] - s[me + 2], s[o + 3] - s[me + 3]]);
    }
    obs
}

/// One particle world instance, owned by a single rollout worker.
#[derive(Debug, Clone)]
pub struct World {
    config: WorldConfig,
    layout: StateLayout,
    state: GlobalState,
    steps: usize,
    adversary: AdversaryPolicy,
}

impl World {
    pub fn new(config: WorldConfig) -> Result<Self> {
        config.validate()?;
        let layout = StateLayout::new(&config);
        Ok(Self {
            state: GlobalState(vec![0.0; layout.len()]),
            config,
            layout,
            steps: 0,
            adversary: AdversaryPolicy::Scripted,
        })
    }

    pub fn with_adversary(mut self, policy: AdversaryPolicy) -> Self {
        self.adversary = policy;
        self
    }

    pub fn config(&self) -> &WorldConfig {
        &self.config
    }

    pub fn layout(&self) -> &StateLayout {
        &self.layout
    }

    pub fn state(&self) -> &GlobalState {
        &self.state
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn reset(&mut self, seed: u64) -> Vec<Vec<f64>> {
        let (state, obs) = reset(&self.config, seed);
        self.state = state;
        self.steps = 0;
        obs
    }

    /// Overwrites the current state, e.g. to replay a stored configuration.
    pub fn set_state(&mut self, state: GlobalState) -> Result<()> {
        check_len("global state", self.layout.len(), state.len())?;
        self.state = state;
        Ok(())
    }

    pub fn observe(&self, index: usize) -> Result<Vec<f64>> {
        observe(&self.config, &self.state, index)
    }

    /// Advances physics by one step. `adversary` overrides the configured
    /// opponent policy for this step when given.
    pub fn step(&mut self, actions: &[[f64; 2]], adversary: Option<[f64; 2]>) -> Result<StepResult> {
        check_len("joint action", self.layout.n_agents, actions.len())?;
        if let Some((i, _)) = actions
            .iter()
            .enumerate()
            .find(|(_, a)| a.iter().any(|v| v.is_nan()))
        {
            return Err(Error::InvalidAction(format!("NaN in action of agent {i}")));
        }
        if adversary.is_some_and(|a| a.iter().any(|v| v.is_nan())) {
            return Err(Error::InvalidAction("NaN in adversary action".into()));
        }
        let adv_action = match self.layout.adversary() {
            Some(_) => Some(match adversary {
                Some(a) => a,
                None => self.adversary.act(&self.config, &self.state)?,
            }),
            None => None,
        };

        let c = &self.config;
        let s = &mut self.state.0;
        for (i, a) in actions.iter().enumerate() {
            let o = self.layout.agent(i);
            integrate(c, &mut s[o..o + 4], *a, c.agent_accel, c.agent_max_speed);
        }
        if let (Some(o), Some(a)) = (self.layout.adversary(), adv_action) {
            integrate(c, &mut s[o..o + 4], a, c.adversary_accel, c.adversary_max_speed);
        }

        let events = self.resolve_contacts();
        let reward = reward_for(&self.config, &self.state, &events);
        self.steps += 1;
        let observations = (0..self.layout.n_agents)
            .map(|i| observe_unchecked(&self.layout, &self.state, i))
            .collect();
        Ok(StepResult {
            state: self.state.clone(),
            observations,
            reward,
            events,
            terminal: self.steps >= self.config.episode_length,
        })
    }

    fn resolve_contacts(&mut self) -> StepEvents {
        let c = &self.config;
        let l = &self.layout;
        let s = &mut self.state.0;
        let dist = |s: &[f64], a: usize, b: usize| (s[a] - s[b]).hypot(s[a + 1] - s[b + 1]);
        let mut ev = StepEvents::default();

        for i in 0..l.n_agents {
            for j in i + 1..l.n_agents {
                if dist(s, l.agent(i), l.agent(j)) < 2.0 * c.agent_radius {
                    ev.agent_collisions += 1;
                }
            }
        }
        if let Some(o) = l.adversary() {
            ev.adversary_contacts = (0..l.n_agents)
                .filter(|&i| dist(s, l.agent(i), o) < c.agent_radius + c.adversary_radius)
                .count();
        }
        for k in 0..l.n_landmarks {
            let Some(f) = l.flag(k) else { continue };
            if s[f] > 0.5 {
                continue;
            }
            let lm = l.landmark(k);
            match l.adversary() {
                // keep-away: treasures are taken by the theft
                Some(o) => {
                    if dist(s, o, lm) < c.adversary_radius + c.landmark_radius {
                        s[f] = 1.0;
                        ev.thefts += 1;
                    }
                }
                None => {
                    if (0..l.n_agents).any(|i| dist(s, l.agent(i), lm) < c.agent_radius + c.landmark_radius) {
                        s[f] = 1.0;
                        ev.pickups += 1;
                    }
                }
            }
        }
        ev
    }
}

/// Damped double integrator with unit mass, speed cap and arena clamp.
fn integrate(c: &WorldConfig, body: &mut [f64], action: [f64; 2], accel: f64, max_speed: f64) {
    let a = [action[0].clamp(-1.0, 1.0), action[1].clamp(-1.0, 1.0)];
    let mut vx = (1.0 - c.damping) * body[2] + a[0] * accel * c.dt;
    let mut vy = (1.0 - c.damping) * body[3] + a[1] * accel * c.dt;
    let speed = vx.hypot(vy);
    if speed > max_speed {
        vx *= max_speed / speed;
        vy *= max_speed / speed;
    }
    body[0] = (body[0] + vx * c.dt).clamp(-c.arena, c.arena);
    body[1] = (body[1] + vy * c.dt).clamp(-c.arena, c.arena);
    body[2] = vx;
    body[3] = vy;
}
