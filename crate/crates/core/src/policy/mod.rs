//! Goal-conditioned agents: a hypernetwork that writes each agent's policy
//! head from the common goal, intrinsic and proxy rewards, and the DDPG
//! learners (per agent and centralized).

mod central;
mod hyper;
mod learner;
mod reward;

pub use central::{CentralBatch, CentralLearner};
pub use hyper::{GoalPolicy, HyperMode, PolicyCache, PolicyGrads};
pub use learner::{AgentBatch, AgentLearner, LearnerConfig};
pub use reward::{
    intrinsic_reward_euclidean, intrinsic_reward_latent, intrinsic_reward_latent_with_context, proxy_reward,
    IntrinsicVariant, RewardConfig,
};
