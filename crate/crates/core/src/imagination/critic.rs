use ndarray::{Array2, ArrayView2};
use rand::Rng;

use crate::error::{check_len, Error, Result};
use crate::nn::{mlp_backward_batch, mlp_forward_batch, mlp_layout, Activation, ParamSet};

/// State-value net `V^g` used to score imagined goal states.
#[derive(Debug, Clone, PartialEq)]
pub struct GoalCritic {
    pub net: ParamSet,
}

impl GoalCritic {
    pub fn new<R: Rng + ?Sized>(state_dim: usize, hidden: &[usize], rng: &mut R) -> Self {
        Self {
            net: ParamSet::init(
                mlp_layout(state_dim, hidden, 1, Activation::Relu, Activation::Linear),
                rng,
            ),
        }
    }

    pub fn from_params(net: ParamSet) -> Result<Self> {
        if net.output_dim() != Some(1) {
            return Err(Error::LayoutMismatch("goal critic must output one value".into()));
        }
        Ok(Self { net })
    }

    pub fn state_dim(&self) -> usize {
        self.net.input_dim().unwrap_or(0)
    }

    pub fn value(&self, state: &[f64]) -> Result<f64> {
        check_len("goal critic input", self.state_dim(), state.len())?;
        Ok(self.net.forward(state)?[0])
    }

    pub fn value_batch(&self, states: ArrayView2<f64>) -> Result<Vec<f64>> {
        Ok(self.net.forward_batch(states)?.column(0).to_vec())
    }

    /// Mean over the batch of `(1/N) Σ_i (V(s) - Q_i)^2`; `q_values` holds
    /// one row of N agent critic values per state.
    pub fn loss_and_grads(
        &self,
        states: ArrayView2<f64>,
        q_values: ArrayView2<f64>,
    ) -> Result<(f64, Vec<f64>)> {
        let b = states.nrows();
        let n = q_values.ncols();
        if n == 0 {
            return Err(Error::Config(
                "goal critic targets need at least one agent value".into(),
            ));
        }
        if b == 0 {
            return Err(Error::Config("goal critic loss needs a nonempty batch".into()));
        }
        check_len("goal critic target batch", b, q_values.nrows())?;
        let cache = mlp_forward_batch(&self.net, states)?;
        let v = cache.output().column(0).to_owned();
        let mut loss = 0.0;
        let mut d_out = Array2::zeros((b, 1));
        for j in 0..b {
            let mut g = 0.0;
            for i in 0..n {
                let r = v[j] - q_values[[j, i]];
                loss += r * r;
                g += 2.0 * r;
            }
            d_out[[j, 0]] = g / (n as f64 * b as f64);
        }
        loss /= n as f64 * b as f64;
        if !loss.is_finite() {
            return Err(Error::NonFinite {
                network: "goal_critic".into(),
            });
        }
        let (grads, _) = mlp_backward_batch(&self.net, &cache, d_out.view())?;
        Ok((loss, grads))
    }
}
