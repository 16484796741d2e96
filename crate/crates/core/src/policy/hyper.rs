use ndarray::{s, Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::nn::{
    mlp_backward_batch, mlp_forward_batch, mlp_layout, raw_backward_batch, raw_forward_batch, Activation,
    ForwardCache, LayerSpec, ParamSet,
};

/// Which part of the policy the hypernetwork writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum HyperMode {
    /// Only the last layer; the trunk is ordinary parameters.
    #[default]
    Head,
    /// Every policy layer; the trunk is empty.
    Full,
}

impl std::str::FromStr for HyperMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "head" => Ok(Self::Head),
            "full" => Ok(Self::Full),
            other => Err(Error::Config(format!("unknown hypernet mode `{other}`"))),
        }
    }
}

/// `action = head[hyper(goal)](trunk(obs))`, squashed to `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GoalPolicy {
    pub trunk: ParamSet,
    pub hyper: ParamSet,
    pub head_layout: Vec<LayerSpec>,
}

pub struct PolicyCache {
    trunk: ForwardCache,
    hyper: ForwardCache,
    heads: Vec<ForwardCache>,
    actions: Array2<f64>,
}

impl PolicyCache {
    pub fn actions(&self) -> &Array2<f64> {
        &self.actions
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyGrads {
    pub trunk: Vec<f64>,
    pub hyper: Vec<f64>,
}

impl GoalPolicy {
    pub fn new<R: Rng + ?Sized>(
        obs_dim: usize,
        goal_dim: usize,
        action_dim: usize,
        hidden: &[usize],
        mode: HyperMode,
        rng: &mut R,
    ) -> Self {
        let relu = Activation::Relu;
        let (trunk_layout, head_layout) = match mode {
            HyperMode::Head => {
                let (&last, rest) = hidden.split_last().expect("policy needs a hidden layer");
                (
                    mlp_layout(obs_dim, rest, last, relu, relu),
                    vec![LayerSpec::new(last, action_dim, Activation::Tanh)],
                )
            }
            HyperMode::Full => (
                Vec::new(),
                mlp_layout(obs_dim, hidden, action_dim, relu, Activation::Tanh),
            ),
        };
        let head_len: usize = head_layout.iter().map(LayerSpec::param_count).sum();
        let trunk = ParamSet::init(trunk_layout, rng);
        let hyper = ParamSet::init(
            mlp_layout(goal_dim, hidden, head_len, relu, Activation::Linear),
            rng,
        );
        Self {
            trunk,
            hyper,
            head_layout,
        }
    }

    pub fn head_param_count(&self) -> usize {
        self.head_layout.iter().map(LayerSpec::param_count).sum()
    }

    pub fn goal_dim(&self) -> usize {
        self.hyper.input_dim().unwrap_or(0)
    }

    pub fn action_dim(&self) -> usize {
        self.head_layout.last().map(|l| l.out_dim).unwrap_or(0)
    }

    pub fn obs_dim(&self) -> usize {
        match self.trunk.input_dim() {
            Some(d) => d,
            None => self.head_layout.first().map(|l| l.in_dim).unwrap_or(0),
        }
    }

    /// Head parameters written for `goal`.
    pub fn hypernet_params(&self, goal: &[f64]) -> Result<Vec<f64>> {
        check_len("goal", self.goal_dim(), goal.len())?;
        self.hyper.forward(goal)
    }

    pub fn forward_batch(&self, obs: ArrayView2<f64>, goals: ArrayView2<f64>) -> Result<PolicyCache> {
        check_len("policy goal batch", obs.nrows(), goals.nrows())?;
        let trunk = mlp_forward_batch(&self.trunk, obs)?;
        let hyper = mlp_forward_batch(&self.hyper, goals)?;
        let b = obs.nrows();
        let mut actions = Array2::zeros((b, self.action_dim()));
        let mut heads = Vec::with_capacity(b);
        for j in 0..b {
            let w = hyper.output().row(j);
            let head = raw_forward_batch(
                &self.head_layout,
                w.as_slice().expect("contiguous row"),
                trunk.output().slice(s![j..j + 1, ..]),
            )?;
            actions.row_mut(j).assign(&head.output().row(0));
            heads.push(head);
        }
        Ok(PolicyCache {
            trunk,
            hyper,
            heads,
            actions,
        })
    }

    /// Gradients of `sum_j <d_actions_j, action_j>` with respect to trunk and
    /// hypernet parameters. Goals are inputs and receive no gradient.
    pub fn backward_batch(&self, cache: &PolicyCache, d_actions: ArrayView2<f64>) -> Result<PolicyGrads> {
        let b = cache.heads.len();
        check_len("policy action gradient batch", b, d_actions.nrows())?;
        let mut d_head = Array2::zeros((b, self.head_param_count()));
        let mut d_trunk_out = Array2::zeros(cache.trunk.output().raw_dim());
        for j in 0..b {
            let w = cache.hyper.output().row(j);
            let (gw, gx) = raw_backward_batch(
                &self.head_layout,
                w.as_slice().expect("contiguous row"),
                &cache.heads[j],
                d_actions.slice(s![j..j + 1, ..]),
            )?;
            d_head.row_mut(j).assign(&ndarray::ArrayView1::from(&gw));
            d_trunk_out.row_mut(j).assign(&gx.row(0));
        }
        let (hyper, _) = mlp_backward_batch(&self.hyper, &cache.hyper, d_head.view())?;
        let (trunk, _) = mlp_backward_batch(&self.trunk, &cache.trunk, d_trunk_out.view())?;
        Ok(PolicyGrads { trunk, hyper })
    }

    /// Noisy action for one observation, clamped to `[-1, 1]`.
    pub fn act(&self, obs: &[f64], goal: &[f64], noise: &[f64]) -> Result<Vec<f64>> {
        check_len("observation", self.obs_dim(), obs.len())?;
        check_len("goal", self.goal_dim(), goal.len())?;
        check_len("action noise", self.action_dim(), noise.len())?;
        let o = ArrayView2::from_shape((1, obs.len()), obs).expect("row");
        let g = ArrayView2::from_shape((1, goal.len()), goal).expect("row");
        let cache = self.forward_batch(o, g)?;
        Ok(cache
            .actions
            .row(0)
            .iter()
            .zip(noise)
            .map(|(a, n)| (a + n).clamp(-1.0, 1.0))
            .collect())
    }
}
