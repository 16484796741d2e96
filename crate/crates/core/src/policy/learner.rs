use ndarray::{concatenate, s, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::nn::{
    adam_step, mlp_backward_batch, mlp_forward_batch, mlp_layout, soft_update, Activation, AdamConfig,
    Checkpoint, OptimizerState, ParamSet,
};

use super::{GoalPolicy, HyperMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub gamma: f64,
    pub tau: f64,
    pub critic_lr: f64,
    pub actor_lr: f64,
    pub hidden: Vec<usize>,
    pub hyper_mode: HyperMode,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            gamma: 0.95,
            tau: 0.01,
            critic_lr: 1e-3,
            actor_lr: 1e-4,
            hidden: vec![64, 64],
            hyper_mode: HyperMode::Head,
        }
    }
}

/// One agent's slice of a replay sample. `rewards` are that agent's proxy
/// rewards; `goals` are the goals in force when each action was taken.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentBatch {
    pub states: Array2<f64>,
    pub obs: Array2<f64>,
    pub actions: Array2<f64>,
    pub rewards: Vec<f64>,
    pub next_states: Array2<f64>,
    pub next_obs: Array2<f64>,
    pub dones: Vec<f64>,
    pub goals: Array2<f64>,
}

impl AgentBatch {
    pub fn len(&self) -> usize {
        self.states.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// DDPG learner for one agent: goal-conditioned policy, critic over
/// `(global state, own action)`, target copies and Adam states.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentLearner {
    pub policy: GoalPolicy,
    pub critic: ParamSet,
    pub target_policy: GoalPolicy,
    pub target_critic: ParamSet,
    pub opt_trunk: OptimizerState,
    pub opt_hyper: OptimizerState,
    pub opt_critic: OptimizerState,
    pub config: LearnerConfig,
}

pub(crate) fn hcat(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Array2<f64> {
    concatenate(Axis(1), &[a.view(), b.view()]).expect("same batch size")
}

impl AgentLearner {
    pub fn new<R: Rng + ?Sized>(
        obs_dim: usize,
        state_dim: usize,
        action_dim: usize,
        config: LearnerConfig,
        rng: &mut R,
    ) -> Self {
        let policy = GoalPolicy::new(
            obs_dim,
            state_dim,
            action_dim,
            &config.hidden,
            config.hyper_mode,
            rng,
        );
        let critic = ParamSet::init(
            mlp_layout(
                state_dim + action_dim,
                &config.hidden,
                1,
                Activation::Relu,
                Activation::Linear,
            ),
            rng,
        );
        let actor = AdamConfig::with_lr(config.actor_lr);
        Self {
            opt_trunk: OptimizerState::new(policy.trunk.len(), actor),
            opt_hyper: OptimizerState::new(policy.hyper.len(), actor),
            opt_critic: OptimizerState::new(critic.len(), AdamConfig::with_lr(config.critic_lr)),
            target_policy: policy.clone(),
            target_critic: critic.clone(),
            policy,
            critic,
            config,
        }
    }

    pub fn act(&self, obs: &[f64], goal: &[f64], noise: &[f64]) -> Result<Vec<f64>> {
        self.policy.act(obs, goal, noise)
    }

    pub fn q_values(&self, states: ArrayView2<f64>, actions: ArrayView2<f64>) -> Result<Vec<f64>> {
        check_len("critic action batch", states.nrows(), actions.nrows())?;
        Ok(self
            .critic
            .forward_batch(hcat(states, actions).view())?
            .column(0)
            .to_vec())
    }

    /// TD targets from the target networks, treated as constants.
    pub fn critic_targets(&self, batch: &AgentBatch) -> Result<Vec<f64>> {
        let next = self
            .target_policy
            .forward_batch(batch.next_obs.view(), batch.goals.view())?;
        let q_next = self
            .target_critic
            .forward_batch(hcat(batch.next_states.view(), next.actions().view()).view())?;
        check_len("reward batch", batch.len(), batch.rewards.len())?;
        check_len("done batch", batch.len(), batch.dones.len())?;
        Ok((0..batch.len())
            .map(|j| batch.rewards[j] + self.config.gamma * (1.0 - batch.dones[j]) * q_next[[j, 0]])
            .collect())
    }

    /// `mean_j (y_j - Q(s_j, a_j))^2` and its critic gradient for fixed targets.
    pub fn critic_loss_with_targets(
        &self,
        states: ArrayView2<f64>,
        actions: ArrayView2<f64>,
        targets: &[f64],
    ) -> Result<(f64, Vec<f64>)> {
        let b = states.nrows();
        if b == 0 {
            return Err(Error::Config("critic update needs a nonempty batch".into()));
        }
        check_len("critic target batch", b, targets.len())?;
        let cache = mlp_forward_batch(&self.critic, hcat(states, actions).view())?;
        let mut loss = 0.0;
        let mut d = Array2::zeros((b, 1));
        for j in 0..b {
            let r = cache.output()[[j, 0]] - targets[j];
            loss += r * r;
            d[[j, 0]] = 2.0 * r / b as f64;
        }
        loss /= b as f64;
        if !loss.is_finite() {
            return Err(Error::NonFinite {
                network: "agent_critic".into(),
            });
        }
        let (g, _) = mlp_backward_batch(&self.critic, &cache, d.view())?;
        Ok((loss, g))
    }

    pub fn critic_loss_and_grads(&self, batch: &AgentBatch) -> Result<(f64, Vec<f64>)> {
        if batch.is_empty() {
            return Err(Error::Config("critic update needs a nonempty batch".into()));
        }
        let y = self.critic_targets(batch)?;
        self.critic_loss_with_targets(batch.states.view(), batch.actions.view(), &y)
    }

    /// Batch mean of `Q(s_j, pi(o_j, g_j))` and its gradient (ascent direction)
    /// with respect to trunk and hypernet. The critic is held fixed.
    pub fn policy_objective_and_grads(
        &self,
        states: ArrayView2<f64>,
        obs: ArrayView2<f64>,
        goals: ArrayView2<f64>,
    ) -> Result<(f64, super::PolicyGrads)> {
        let b = states.nrows();
        if b == 0 {
            return Err(Error::Config("policy update needs a nonempty batch".into()));
        }
        let pc = self.policy.forward_batch(obs, goals)?;
        let qc = mlp_forward_batch(&self.critic, hcat(states, pc.actions().view()).view())?;
        let obj = qc.output().column(0).sum() / b as f64;
        if !obj.is_finite() {
            return Err(Error::NonFinite {
                network: "agent_policy".into(),
            });
        }
        let d_q = Array2::from_elem((b, 1), 1.0 / b as f64);
        let (_, d_in) = mlp_backward_batch(&self.critic, &qc, d_q.view())?;
        let d_a = d_in.slice(s![.., states.ncols()..]);
        let grads = self.policy.backward_batch(&pc, d_a)?;
        if grads.trunk.iter().chain(&grads.hyper).any(|g| !g.is_finite()) {
            return Err(Error::NonFinite {
                network: "agent_policy".into(),
            });
        }
        Ok((obj, grads))
    }

    /// Critic step, policy ascent step on the updated critic, then soft target
    /// updates. Returns `(critic loss, policy objective)`.
    pub fn update(&mut self, batch: &AgentBatch) -> Result<(f64, f64)> {
        let (loss, g) = self.critic_loss_and_grads(batch)?;
        adam_step(&mut self.critic, &g, &mut self.opt_critic, "agent_critic")?;
        let (obj, pg) =
            self.policy_objective_and_grads(batch.states.view(), batch.obs.view(), batch.goals.view())?;
        let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<_>>();
        adam_step(
            &mut self.policy.trunk,
            &neg(&pg.trunk),
            &mut self.opt_trunk,
            "agent_policy_trunk",
        )?;
        adam_step(
            &mut self.policy.hyper,
            &neg(&pg.hyper),
            &mut self.opt_hyper,
            "agent_hypernet",
        )?;
        self.soft_update_targets()?;
        Ok((loss, obj))
    }

    pub fn soft_update_targets(&mut self) -> Result<()> {
        let tau = self.config.tau;
        soft_update(&mut self.target_critic, &self.critic, tau)?;
        soft_update(&mut self.target_policy.trunk, &self.policy.trunk, tau)?;
        soft_update(&mut self.target_policy.hyper, &self.policy.hyper, tau)
    }

    /// Online and target networks under `prefix/`.
    pub fn save_into(&self, ckpt: &mut Checkpoint, prefix: &str) {
        ckpt.insert(format!("{prefix}/trunk"), self.policy.trunk.clone());
        ckpt.insert(format!("{prefix}/hypernet"), self.policy.hyper.clone());
        ckpt.insert(format!("{prefix}/critic"), self.critic.clone());
        ckpt.insert(format!("{prefix}/target_trunk"), self.target_policy.trunk.clone());
        ckpt.insert(
            format!("{prefix}/target_hypernet"),
            self.target_policy.hyper.clone(),
        );
        ckpt.insert(format!("{prefix}/target_critic"), self.target_critic.clone());
    }

    pub fn load_from(&mut self, ckpt: &Checkpoint, prefix: &str) -> Result<()> {
        fn take(dst: &mut ParamSet, ckpt: &Checkpoint, name: String) -> Result<()> {
            let src = ckpt.require(&name)?;
            if !src.same_layout(dst) {
                return Err(Error::LayoutMismatch(format!(
                    "checkpoint section `{name}` does not fit this task"
                )));
            }
            dst.values.clone_from(&src.values);
            Ok(())
        }
        take(&mut self.policy.trunk, ckpt, format!("{prefix}/trunk"))?;
        take(&mut self.policy.hyper, ckpt, format!("{prefix}/hypernet"))?;
        take(&mut self.critic, ckpt, format!("{prefix}/critic"))?;
        take(
            &mut self.target_policy.trunk,
            ckpt,
            format!("{prefix}/target_trunk"),
        )?;
        take(
            &mut self.target_policy.hyper,
            ckpt,
            format!("{prefix}/target_hypernet"),
        )?;
        take(&mut self.target_critic, ckpt, format!("{prefix}/target_critic"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn learner(seed: u64) -> AgentLearner {
        let cfg = LearnerConfig {
            hidden: vec![16, 16],
            ..Default::default()
        };
        AgentLearner::new(5, 6, 2, cfg, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    fn batch(rng: &mut ChaCha8Rng, b: usize) -> AgentBatch {
        let mut m = |c| Array2::from_shape_fn((b, c), |_| rng.gen_range(-1.0..1.0));
        AgentBatch {
            states: m(6),
            obs: m(5),
            actions: m(2),
            next_states: m(6),
            next_obs: m(5),
            goals: m(6),
            rewards: (0..b).map(|j| j as f64 * 0.1).collect(),
            dones: (0..b).map(|j| (j % 2) as f64).collect(),
        }
    }

    #[test]
    fn single_row_hand_loss() {
        let mut l = learner(0);
        l.critic.values.iter_mut().for_each(|v| *v = 0.0);
        let s = array![[0.1, 0.2, 0.3, 0.4, 0.5, 0.6]];
        let a = array![[0.5, -0.5]];
        let (loss, g) = l.critic_loss_with_targets(s.view(), a.view(), &[1.0]).unwrap();
        assert_eq!(loss, 1.0);
        // Gradient descent raises Q: the output bias gradient is negative.
        assert!(*g.last().unwrap() < 0.0);
        let (loss, _) = l.critic_loss_with_targets(s.view(), a.view(), &[0.0]).unwrap();
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn zero_critic_gives_zero_policy_gradient() {
        let mut l = learner(1);
        l.critic.values.iter_mut().for_each(|v| *v = 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let b = batch(&mut rng, 4);
        let (_, g) = l
            .policy_objective_and_grads(b.states.view(), b.obs.view(), b.goals.view())
            .unwrap();
        assert!(g.trunk.iter().chain(&g.hyper).all(|x| *x == 0.0));
    }

    #[test]
    fn targets_move_only_by_soft_update() {
        let mut l = learner(3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let b = batch(&mut rng, 8);
        let t0 = l.critic_targets(&b).unwrap();
        assert_eq!(t0, l.critic_targets(&b).unwrap());
        let before = l.target_critic.clone();
        let online_before = l.critic.clone();
        l.update(&b).unwrap();
        let mut expect = before.clone();
        let mut online = online_before;
        online.values.clone_from(&l.critic.values);
        soft_update(&mut expect, &online, l.config.tau).unwrap();
        assert_eq!(expect, l.target_critic);
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut l = learner(5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        l.update(&batch(&mut rng, 4)).unwrap();
        let mut ck = Checkpoint::new();
        l.save_into(&mut ck, "agent0");
        let mut fresh = learner(7);
        fresh.load_from(&ck, "agent0").unwrap();
        assert_eq!(fresh.policy, l.policy);
        assert_eq!(fresh.target_critic, l.target_critic);
        let mut other = AgentLearner::new(4, 6, 2, l.config.clone(), &mut rng);
        assert!(other.load_from(&ck, "agent0").is_err());
    }
}
