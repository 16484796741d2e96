use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Navigation,
    Treasure,
    Treasure10,
    PredatorPrey,
    KeepAway,
}

impl Task {
    pub const ALL: [Task; 5] = [
        Task::Navigation,
        Task::Treasure,
        Task::Treasure10,
        Task::PredatorPrey,
        Task::KeepAway,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::Navigation => "navigation",
            Task::Treasure => "treasure",
            Task::Treasure10 => "treasure10",
            Task::PredatorPrey => "predator_prey",
            Task::KeepAway => "keep_away",
        }
    }

    pub fn has_adversary(self) -> bool {
        matches!(self, Task::PredatorPrey | Task::KeepAway)
    }

    /// Landmarks carry a collected flag.
    pub fn has_flags(self) -> bool {
        matches!(self, Task::Treasure | Task::Treasure10 | Task::KeepAway)
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::UnknownTask(s.to_owned()))
    }
}

/// Physical and task parameters of one particle world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub task: Task,
    pub n_agents: usize,
    /// Landmarks (navigation) or treasures (treasure tasks, keep-away).
    pub n_landmarks: usize,
    pub episode_length: usize,
    pub dt: f64,
    pub damping: f64,
    pub agent_radius: f64,
    pub landmark_radius: f64,
    pub adversary_radius: f64,
    /// Arena is the square `[-arena, arena]^2`.
    pub arena: f64,
    pub agent_max_speed: f64,
    pub adversary_max_speed: f64,
    pub agent_accel: f64,
    pub adversary_accel: f64,
    /// Penalty per colliding agent pair.
    pub collision_penalty: f64,
    /// A theft flees any guard closer than this.
    pub threat_radius: f64,
}

impl WorldConfig {
    pub fn for_task(task: Task) -> Self {
        let (n_agents, n_landmarks, episode_length) = match task {
            Task::Navigation => (3, 3, 25),
            Task::Treasure => (3, 6, 25),
            Task::Treasure10 => (10, 20, 25),
            Task::PredatorPrey => (3, 0, 100),
            Task::KeepAway => (3, 3, 100),
        };
        Self {
            task,
            n_agents,
            n_landmarks,
            episode_length,
            dt: 0.1,
            damping: 0.25,
            agent_radius: 0.05,
            landmark_radius: 0.05,
            adversary_radius: 0.05,
            arena: 1.0,
            agent_max_speed: 1.0,
            adversary_max_speed: 1.3,
            agent_accel: 1.0,
            adversary_accel: 1.3,
            collision_penalty: 1.0,
            threat_radius: 0.3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.n_agents == 0 {
            return fail("n_agents must be at least 1".into());
        }
        if self.episode_length == 0 {
            return fail("episode_length must be at least 1".into());
        }
        if !(self.dt > 0.0) || !(0.0..=1.0).contains(&self.damping) || !(self.arena > 0.0) {
            return fail("dt and arena must be positive, damping in [0, 1]".into());
        }
        if !(self.agent_max_speed > 0.0) || !(self.adversary_max_speed > 0.0) {
            return fail("max speeds must be positive".into());
        }
        if self.task.has_adversary() && self.adversary_max_speed <= self.agent_max_speed {
            return fail(format!(
                "{}: adversary max speed {} must exceed agent max speed {}",
                self.task, self.adversary_max_speed, self.agent_max_speed
            ));
        }
        if self.task == Task::Navigation && self.n_landmarks == 0 {
            return fail("navigation needs at least one landmark".into());
        }
        Ok(())
    }
}
