use super::{StateLayout, Task, WorldConfig};

/// What happened during one physics step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepEvents {
    /// Unordered agent pairs overlapping after the step.
    pub agent_collisions: usize,
    /// Treasures newly collected by agents.
    pub pickups: usize,
    /// Agents overlapping the adversary.
    pub adversary_contacts: usize,
    /// Treasures newly taken by the adversary (keep-away).
    pub thefts: usize,
}

/// Shared team reward for the post-step `state`.
///
/// - navigation: minus the sum over landmarks of the closest agent distance,
///   minus the collision penalty per colliding pair
/// - treasure tasks: +1 per pickup, minus the penalty per colliding pair
/// - predator-prey: +10 per predator touching the prey
/// - keep-away: +1 per guard touching the theft, minus the penalty per guard pair
pub fn reward_for(config: &WorldConfig, state: &[f64], events: &StepEvents) -> f64 {
    let collisions = config.collision_penalty * events.agent_collisions as f64;
    match config.task {
        Task::Navigation => {
            let layout = StateLayout::new(config);
            let mut cover = 0.0;
            for k in 0..layout.n_landmarks {
                let l = layout.landmark(k);
                let nearest = (0..layout.n_agents)
                    .map(|i| {
                        let a = layout.agent(i);
                        (state[a] - state[l]).hypot(state[a + 1] - state[l + 1])
                    })
                    .fold(f64::INFINITY, f64::min);
                cover += nearest;
            }
            -cover - collisions
        }
        Task::Treasure | Task::Treasure10 => events.pickups as f64 - collisions,
        Task::PredatorPrey => 10.0 * events.adversary_contacts as f64,
        Task::KeepAway => events.adversary_contacts as f64 - collisions,
    }
}
