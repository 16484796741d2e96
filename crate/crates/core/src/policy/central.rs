use ndarray::{s, Array2, ArrayView2};
use rand::Rng;

use crate::error::{check_len, Error, Result};
use crate::nn::{
    adam_step, mlp_backward_batch, mlp_forward_batch, mlp_layout, soft_update, Activation, AdamConfig,
    Checkpoint, OptimizerState, ParamSet,
};

use super::learner::hcat;
use super::LearnerConfig;

/// Replay slice for the centralized learner: joint observations and joint
/// actions, shared external reward.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralBatch {
    pub states: Array2<f64>,
    pub obs: Array2<f64>,
    pub actions: Array2<f64>,
    pub rewards: Vec<f64>,
    pub next_states: Array2<f64>,
    pub next_obs: Array2<f64>,
    pub dones: Vec<f64>,
}

/// Single DDPG policy and critic over the joint observation and action.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralLearner {
    pub policy: ParamSet,
    pub critic: ParamSet,
    pub target_policy: ParamSet,
    pub target_critic: ParamSet,
    pub opt_policy: OptimizerState,
    pub opt_critic: OptimizerState,
    pub config: LearnerConfig,
}

impl CentralLearner {
    pub fn new<R: Rng + ?Sized>(
        joint_obs_dim: usize,
        state_dim: usize,
        joint_action_dim: usize,
        config: LearnerConfig,
        rng: &mut R,
    ) -> Self {
        let relu = Activation::Relu;
        let policy = ParamSet::init(
            mlp_layout(
                joint_obs_dim,
                &config.hidden,
                joint_action_dim,
                relu,
                Activation::Tanh,
            ),
            rng,
        );
        let critic = ParamSet::init(
            mlp_layout(
                state_dim + joint_action_dim,
                &config.hidden,
                1,
                relu,
                Activation::Linear,
            ),
            rng,
        );
        Self {
            opt_policy: OptimizerState::new(policy.len(), AdamConfig::with_lr(config.actor_lr)),
            opt_critic: OptimizerState::new(critic.len(), AdamConfig::with_lr(config.critic_lr)),
            target_policy: policy.clone(),
            target_critic: critic.clone(),
            policy,
            critic,
            config,
        }
    }

    pub fn act(&self, joint_obs: &[f64], noise: &[f64]) -> Result<Vec<f64>> {
        let a = self.policy.forward(joint_obs)?;
        check_len("action noise", a.len(), noise.len())?;
        Ok(a.iter()
            .zip(noise)
            .map(|(a, n)| (a + n).clamp(-1.0, 1.0))
            .collect())
    }

    pub fn critic_loss_and_grads(&self, batch: &CentralBatch) -> Result<(f64, Vec<f64>)> {
        let b = batch.states.nrows();
        if b == 0 {
            return Err(Error::Config("critic update needs a nonempty batch".into()));
        }
        check_len("reward batch", b, batch.rewards.len())?;
        check_len("done batch", b, batch.dones.len())?;
        let next_a = self.target_policy.forward_batch(batch.next_obs.view())?;
        let q_next = self
            .target_critic
            .forward_batch(hcat(batch.next_states.view(), next_a.view()).view())?;
        let cache = mlp_forward_batch(
            &self.critic,
            hcat(batch.states.view(), batch.actions.view()).view(),
        )?;
        let mut loss = 0.0;
        let mut d = Array2::zeros((b, 1));
        for j in 0..b {
            let y = batch.rewards[j] + self.config.gamma * (1.0 - batch.dones[j]) * q_next[[j, 0]];
            let r = cache.output()[[j, 0]] - y;
            loss += r * r;
            d[[j, 0]] = 2.0 * r / b as f64;
        }
        loss /= b as f64;
        if !loss.is_finite() {
            return Err(Error::NonFinite {
                network: "central_critic".into(),
            });
        }
        let (g, _) = mlp_backward_batch(&self.critic, &cache, d.view())?;
        Ok((loss, g))
    }

    pub fn policy_objective_and_grads(
        &self,
        states: ArrayView2<f64>,
        obs: ArrayView2<f64>,
    ) -> Result<(f64, Vec<f64>)> {
        let b = states.nrows();
        if b == 0 {
            return Err(Error::Config("policy update needs a nonempty batch".into()));
        }
        let pc = mlp_forward_batch(&self.policy, obs)?;
        let qc = mlp_forward_batch(&self.critic, hcat(states, pc.output().view()).view())?;
        let obj = qc.output().column(0).sum() / b as f64;
        if !obj.is_finite() {
            return Err(Error::NonFinite {
                network: "central_policy".into(),
            });
        }
        let d_q = Array2::from_elem((b, 1), 1.0 / b as f64);
        let (_, d_in) = mlp_backward_batch(&self.critic, &qc, d_q.view())?;
        let (g, _) = mlp_backward_batch(&self.policy, &pc, d_in.slice(s![.., states.ncols()..]))?;
        Ok((obj, g))
    }

    pub fn update(&mut self, batch: &CentralBatch) -> Result<(f64, f64)> {
        let (loss, g) = self.critic_loss_and_grads(batch)?;
        adam_step(&mut self.critic, &g, &mut self.opt_critic, "central_critic")?;
        let (obj, g) = self.policy_objective_and_grads(batch.states.view(), batch.obs.view())?;
        let neg: Vec<f64> = g.iter().map(|x| -x).collect();
        adam_step(&mut self.policy, &neg, &mut self.opt_policy, "central_policy")?;
        soft_update(&mut self.target_critic, &self.critic, self.config.tau)?;
        soft_update(&mut self.target_policy, &self.policy, self.config.tau)?;
        Ok((loss, obj))
    }

    pub fn save_into(&self, ckpt: &mut Checkpoint, prefix: &str) {
        ckpt.insert(format!("{prefix}/policy"), self.policy.clone());
        ckpt.insert(format!("{prefix}/critic"), self.critic.clone());
        ckpt.insert(format!("{prefix}/target_policy"), self.target_policy.clone());
        ckpt.insert(format!("{prefix}/target_critic"), self.target_critic.clone());
    }

    pub fn load_from(&mut self, ckpt: &Checkpoint, prefix: &str) -> Result<()> {
        for (dst, name) in [
            (&mut self.policy, "policy"),
            (&mut self.critic, "critic"),
            (&mut self.target_policy, "target_policy"),
            (&mut self.target_critic, "target_critic"),
        ] {
            let key = format!("{prefix}/{name}");
            let src = ckpt.require(&key)?;
            if !src.same_layout(dst) {
                return Err(Error::LayoutMismatch(format!(
                    "checkpoint section `{key}` does not fit this task"
                )));
            }
            dst.values.clone_from(&src.values);
        }
        Ok(())
    }
}
