use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::envs::{Task, WorldConfig};
use crate::error::{Error, Result};
use crate::imagination::{GoalActorConfig, GoalStrategy};
use crate::nn::SigmaClamp;
use crate::policy::{HyperMode, IntrinsicVariant, LearnerConfig, RewardConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Backbone {
    #[default]
    Magi,
    DdpgIndependent,
    DdpgCentralized,
}

impl Backbone {
    pub fn name(self) -> &'static str {
        match self {
            Backbone::Magi => "magi",
            Backbone::DdpgIndependent => "ddpg_independent",
            Backbone::DdpgCentralized => "ddpg_centralized",
        }
    }
}

impl std::str::FromStr for Backbone {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "magi" => Ok(Self::Magi),
            "ddpg_independent" => Ok(Self::DdpgIndependent),
            "ddpg_centralized" => Ok(Self::DdpgCentralized),
            other => Err(Error::Config(format!("unknown backbone `{other}`"))),
        }
    }
}

/// Every knob of a training run. Read from a flat TOML file; unknown keys
/// are rejected. Unset world keys fall back to the task defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub task: Task,
    pub backbone: Backbone,
    pub seed: u64,
    /// Seeds for multi-run commands; empty means `[seed]`.
    pub seeds: Vec<u64>,

    pub total_steps: u64,
    pub eval_period: u64,
    pub eval_episodes: usize,
    pub warmup: u64,
    pub batch_size: usize,
    pub replay_capacity: usize,
    pub cvae_period: u64,
    pub noise_start: f64,
    pub noise_end: f64,

    pub gamma: f64,
    pub tau: f64,
    pub critic_lr: f64,
    pub actor_lr: f64,
    pub cvae_lr: f64,
    pub goal_critic_lr: f64,
    pub goal_actor_lr: f64,
    pub hidden: Vec<usize>,
    pub hyper_mode: HyperMode,

    pub goal_strategy: GoalStrategy,
    pub samples: usize,
    pub sample_range: f64,
    pub horizon: usize,
    pub goal_refresh: usize,
    pub latent_dim: usize,
    pub sigma_log_min: f64,
    pub sigma_log_max: f64,
    pub lambda: f64,
    pub intrinsic: IntrinsicVariant,

    pub n_agents: Option<usize>,
    pub n_landmarks: Option<usize>,
    pub episode_length: Option<usize>,
    pub dt: Option<f64>,
    pub damping: Option<f64>,
    pub agent_radius: Option<f64>,
    pub landmark_radius: Option<f64>,
    pub adversary_radius: Option<f64>,
    pub arena: Option<f64>,
    pub agent_max_speed: Option<f64>,
    pub adversary_max_speed: Option<f64>,
    pub agent_accel: Option<f64>,
    pub adversary_accel: Option<f64>,
    pub collision_penalty: Option<f64>,
    pub threat_radius: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let clamp = SigmaClamp::default();
        Self {
            task: Task::Navigation,
            backbone: Backbone::Magi,
            seed: 0,
            seeds: Vec::new(),
            total_steps: 300_000,
            eval_period: 5_000,
            eval_episodes: 32,
            warmup: 5_000,
            batch_size: 256,
            replay_capacity: 1_000_000,
            cvae_period: 5,
            noise_start: 0.1,
            noise_end: 0.01,
            gamma: 0.95,
            tau: 0.01,
            critic_lr: 1e-3,
            actor_lr: 1e-4,
            cvae_lr: 1e-3,
            goal_critic_lr: 1e-3,
            goal_actor_lr: 1e-4,
            hidden: vec![64, 64],
            hyper_mode: HyperMode::Head,
            goal_strategy: GoalStrategy::Uniform,
            samples: 16,
            sample_range: 2.0,
            horizon: 4,
            goal_refresh: 1,
            latent_dim: 8,
            sigma_log_min: clamp.log_min,
            sigma_log_max: clamp.log_max,
            lambda: 0.001,
            intrinsic: IntrinsicVariant::Euclidean,
            n_agents: None,
            n_landmarks: None,
            episode_length: None,
            dt: None,
            damping: None,
            agent_radius: None,
            landmark_radius: None,
            adversary_radius: None,
            arena: None,
            agent_max_speed: None,
            adversary_max_speed: None,
            agent_accel: None,
            adversary_accel: None,
            collision_penalty: None,
            threat_radius: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn seed_list(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            vec![self.seed]
        } else {
            self.seeds.clone()
        }
    }

    pub fn world(&self) -> WorldConfig {
        let mut w = WorldConfig::for_task(self.task);
        macro_rules! over {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { w.$f = v; } )* };
        }
        over!(
            n_agents,
            n_landmarks,
            episode_length,
            dt,
            damping,
            agent_radius,
            landmark_radius,
            adversary_radius,
            arena,
            agent_max_speed,
            adversary_max_speed,
            agent_accel,
            adversary_accel,
            collision_penalty,
            threat_radius
        );
        w
    }

    pub fn learner(&self) -> LearnerConfig {
        LearnerConfig {
            gamma: self.gamma,
            tau: self.tau,
            critic_lr: self.critic_lr,
            actor_lr: self.actor_lr,
            hidden: self.hidden.clone(),
            hyper_mode: self.hyper_mode,
        }
    }

    pub fn goal_actor(&self) -> GoalActorConfig {
        GoalActorConfig {
            strategy: self.goal_strategy,
            samples: self.samples,
            range: self.sample_range,
            refresh: self.goal_refresh,
        }
    }

    pub fn reward(&self) -> RewardConfig {
        RewardConfig {
            lambda: self.lambda,
            variant: self.intrinsic,
        }
    }

    pub fn sigma_clamp(&self) -> SigmaClamp {
        SigmaClamp {
            log_min: self.sigma_log_min,
            log_max: self.sigma_log_max,
        }
    }

    /// Exploration noise standard deviation at `step`, linear from start to end.
    pub fn noise_std(&self, step: u64) -> f64 {
        let frac = if self.total_steps == 0 {
            1.0
        } else {
            (step as f64 / self.total_steps as f64).min(1.0)
        };
        self.noise_start + (self.noise_end - self.noise_start) * frac
    }

    pub fn validate(&self) -> Result<()> {
        let world = self.world();
        world.validate()?;
        self.goal_actor().validate()?;
        self.reward().validate()?;
        let fail = |m: &str| Err(Error::Config(m.into()));
        if self.horizon == 0 || self.horizon >= world.episode_length {
            return Err(Error::Config(format!(
                "horizon must satisfy 1 <= c < episode length ({}), got {}",
                world.episode_length, self.horizon
            )));
        }
        if self.batch_size == 0 || self.replay_capacity == 0 {
            return fail("batch_size and replay_capacity must be positive");
        }
        if self.eval_period == 0 || self.cvae_period == 0 {
            return fail("eval_period and cvae_period must be positive");
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return fail("hidden must list at least one positive width");
        }
        if self.latent_dim == 0 {
            return fail("latent_dim must be positive");
        }
        if !(0.0..=1.0).contains(&self.tau) || !(0.0..=1.0).contains(&self.gamma) {
            return fail("gamma and tau must lie in [0, 1]");
        }
        if self.noise_start < 0.0 || self.noise_end < 0.0 {
            return fail("noise levels must be nonnegative");
        }
        if !(self.sigma_log_min < self.sigma_log_max) {
            return fail("sigma_log_min must be below sigma_log_max");
        }
        Ok(())
    }
}
