//! Seedable 2-D particle worlds with a shared team reward.
//!
//! Global state layout (all tasks):
//!
//! ```text
//! [agent_0 x, y, vx, vy] ... [agent_{N-1} ...]
//! [landmark_0 x, y (, collected)] ...            flag only for treasure-style tasks
//! [adversary x, y, vx, vy]                        predator_prey / keep_away only
//! ```
//!
//! Agent observation layout (agent `i`):
//!
//! ```text
//! own x, y, vx, vy
//! per landmark: dx, dy (, collected)             zeros once collected
//! per other agent j != i (ascending j): dx, dy
//! adversary: dx, dy, dvx, dvy
//! ```

mod adversary;
mod config;
mod export;
mod reward;
mod state;
mod world;

pub use adversary::{scripted_adversary, AdversaryPolicy};
pub use config::{Task, WorldConfig};
pub use export::{write_trajectory_csv, TrajectoryRow};
pub use reward::{reward_for, StepEvents};
pub use state::{extract_agent_position, set_agent_position, GlobalState, StateLayout};
pub use world::{observation_len, observe, reset, StepResult, World};
