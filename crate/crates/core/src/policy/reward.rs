use serde::{Deserialize, Serialize};

use crate::envs::{extract_agent_position, StateLayout};
use crate::error::{Error, Result};
use crate::imagination::CvaeModel;
use crate::nn::gaussian_kl;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum IntrinsicVariant {
    #[default]
    Euclidean,
    LatentKl,
}

impl std::str::FromStr for IntrinsicVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Self::Euclidean),
            "latent_kl" => Ok(Self::LatentKl),
            other => Err(Error::Config(format!("unknown intrinsic variant `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub lambda: f64,
    pub variant: IntrinsicVariant,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            lambda: 0.001,
            variant: IntrinsicVariant::Euclidean,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!(
                "intrinsic weight must be a finite nonnegative number, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Progress of agent `i` toward its slot in the goal:
/// `d(goal_i, s_t_i) - d(goal_i, s_next_i)`.
pub fn intrinsic_reward_euclidean(
    layout: &StateLayout,
    goal: &[f64],
    s_t: &[f64],
    s_next: &[f64],
    agent: usize,
) -> Result<f64> {
    let g = extract_agent_position(layout, goal, agent)?;
    let before = dist(g, extract_agent_position(layout, s_t, agent)?);
    let after = dist(g, extract_agent_position(layout, s_next, agent)?);
    Ok(before - after)
}

/// Latent variant with an explicit conditioning state:
/// `KL(h(goal) || h(a)) - KL(h(goal) || h(b))`, `h(x) = q(z | context, x)`.
pub fn intrinsic_reward_latent_with_context(
    model: &CvaeModel,
    goal: &[f64],
    a: &[f64],
    b: &[f64],
    context: &[f64],
) -> Result<f64> {
    let hg = model.encode(context, goal)?;
    let ha = model.encode(context, a)?;
    let hb = model.encode(context, b)?;
    Ok(gaussian_kl(&hg, &ha)? - gaussian_kl(&hg, &hb)?)
}

/// Latent variant conditioned on `s_t`.
pub fn intrinsic_reward_latent(model: &CvaeModel, goal: &[f64], s_t: &[f64], s_next: &[f64]) -> Result<f64> {
    intrinsic_reward_latent_with_context(model, goal, s_t, s_next, s_t)
}

pub fn proxy_reward(r_ex: f64, r_in: f64, lambda: f64) -> f64 {
    r_ex + lambda * r_in
}
