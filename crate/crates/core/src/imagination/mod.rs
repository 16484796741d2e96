//! Goal imagination: a conditional VAE over `(s_t, s_{t+c})` pairs, a goal
//! critic scoring states, and the two goal actors that turn prior samples into
//! one common goal state.

mod actor;
mod critic;
mod cvae;
mod sampling;

pub use actor::GoalActor;
pub use critic::GoalCritic;
pub use cvae::{CvaeGrads, CvaeLoss, CvaeModel, CvaeTrainer};
pub use sampling::{
    imagine_goal_deterministic, imagine_goal_uniform, select_best, uniform_candidates, GoalActorConfig,
    GoalSample, GoalStrategy,
};
