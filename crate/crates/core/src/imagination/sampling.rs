use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{CvaeModel, GoalActor, GoalCritic};

/// How the common goal is chosen at a decision point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GoalStrategy {
    /// Best of M uniform prior perturbations.
    #[default]
    Uniform,
    /// The goal actor picks the perturbation directly.
    Deterministic,
    /// Always the zero vector; no imagination.
    Constant,
}

impl std::str::FromStr for GoalStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "deterministic" => Ok(Self::Deterministic),
            "constant" => Ok(Self::Constant),
            other => Err(Error::Config(format!("unknown goal strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalActorConfig {
    pub strategy: GoalStrategy,
    pub samples: usize,
    pub range: f64,
    /// Steps a goal is held before it is regenerated.
    pub refresh: usize,
}

impl Default for GoalActorConfig {
    fn default() -> Self {
        Self {
            strategy: GoalStrategy::Uniform,
            samples: 16,
            range: 2.0,
            refresh: 1,
        }
    }
}

impl GoalActorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Config("goal sample count must be at least 1".into()));
        }
        if !(self.range > 0.0 && self.range.is_finite()) {
            return Err(Error::Config("goal sampling range must be positive".into()));
        }
        if self.refresh == 0 {
            return Err(Error::Config("goal refresh period must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoalSample {
    pub latent: Vec<f64>,
    pub goal: Vec<f64>,
    pub value: f64,
}

impl GoalSample {
    /// The zero goal used when imagination is switched off.
    pub fn constant(critic: &GoalCritic) -> Result<Self> {
        let goal = vec![0.0; critic.state_dim()];
        Ok(Self {
            value: critic.value(&goal)?,
            latent: Vec::new(),
            goal,
        })
    }
}

/// Draws `m` perturbations uniform in `[-range, range]^L`, decodes them
/// around the prior at `s_t` and scores each one.
pub fn uniform_candidates<R: Rng + ?Sized>(
    model: &CvaeModel,
    critic: &GoalCritic,
    s_t: &[f64],
    m: usize,
    range: f64,
    rng: &mut R,
) -> Result<Vec<GoalSample>> {
    if m == 0 {
        return Err(Error::Config("goal sample count must be at least 1".into()));
    }
    let prior = model.prior(s_t)?;
    let l = model.latent_dim;
    let mut z = Array2::zeros((m, l));
    for j in 0..m {
        for k in 0..l {
            let e: f64 = rng.gen_range(-range..=range);
            z[[j, k]] = prior.mu[k] + prior.sigma[k] * e;
        }
    }
    let goals = model.decode_many(s_t, z.view())?;
    let values = critic.value_batch(goals.view())?;
    Ok((0..m)
        .map(|j| GoalSample {
            latent: z.row(j).to_vec(),
            goal: goals.row(j).to_vec(),
            value: values[j],
        })
        .collect())
}

/// Highest-valued candidate; ties go to the lowest index.
pub fn select_best(candidates: Vec<GoalSample>) -> Option<GoalSample> {
    let mut best: Option<GoalSample> = None;
    for c in candidates {
        match &best {
            Some(b) if !(c.value > b.value) => {}
            _ => best = Some(c),
        }
    }
    best
}

pub fn imagine_goal_uniform<R: Rng + ?Sized>(
    model: &CvaeModel,
    critic: &GoalCritic,
    s_t: &[f64],
    m: usize,
    range: f64,
    rng: &mut R,
) -> Result<GoalSample> {
    let cands = uniform_candidates(model, critic, s_t, m, range, rng)?;
    Ok(select_best(cands).expect("at least one candidate"))
}

pub fn imagine_goal_deterministic(
    model: &CvaeModel,
    critic: &GoalCritic,
    actor: &GoalActor,
    s_t: &[f64],
) -> Result<GoalSample> {
    let prior = model.prior(s_t)?;
    let eps = actor.forward(s_t, &prior)?;
    let latent: Vec<f64> = (0..model.latent_dim)
        .map(|k| prior.mu[k] + prior.sigma[k] * eps[k])
        .collect();
    let goal = model.decode(s_t, &latent)?;
    let value = critic.value(&goal)?;
    Ok(GoalSample { latent, goal, value })
}
