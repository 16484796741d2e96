use ndarray::{concatenate, s, Array2, ArrayView2, Axis};
use rand::Rng;

use crate::error::{check_len, Error, Result};
use crate::nn::{
    adam_step, mlp_backward_batch, mlp_forward_batch, mlp_layout, Activation, GaussianSpec, OptimizerState,
    ParamSet,
};

use super::{CvaeModel, GoalCritic};

/// Deterministic goal actor: `(s, mu, sigma) -> eps` with every component
/// squashed into `[-range, range]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GoalActor {
    pub net: ParamSet,
    pub range: f64,
}

impl GoalActor {
    pub fn new<R: Rng + ?Sized>(
        state_dim: usize,
        latent_dim: usize,
        hidden: &[usize],
        range: f64,
        rng: &mut R,
    ) -> Self {
        let layout = mlp_layout(
            state_dim + 2 * latent_dim,
            hidden,
            latent_dim,
            Activation::Relu,
            Activation::Tanh,
        );
        Self {
            net: ParamSet::init(layout, rng),
            range,
        }
    }

    pub fn latent_dim(&self) -> usize {
        self.net.output_dim().unwrap_or(0)
    }

    fn input_row(s_t: &[f64], prior: &GaussianSpec) -> Vec<f64> {
        s_t.iter().chain(&prior.mu).chain(&prior.sigma).copied().collect()
    }

    pub fn forward(&self, s_t: &[f64], prior: &GaussianSpec) -> Result<Vec<f64>> {
        check_len("goal actor latent", self.latent_dim(), prior.dim())?;
        let out = self.net.forward(&Self::input_row(s_t, prior))?;
        Ok(out.into_iter().map(|e| e * self.range).collect())
    }

    /// Batch objective `mean_j V(dec(s_j, mu_j + sigma_j * eps_j))` and its
    /// gradient with respect to the actor parameters. Decoder and critic are
    /// held fixed.
    pub fn objective_and_grads(
        &self,
        model: &CvaeModel,
        critic: &GoalCritic,
        states: ArrayView2<f64>,
        priors: &[GaussianSpec],
    ) -> Result<(f64, Vec<f64>)> {
        let b = states.nrows();
        let sd = model.state_dim();
        let l = model.latent_dim;
        if b == 0 {
            return Err(Error::Config("goal actor update needs a nonempty batch".into()));
        }
        check_len("goal actor prior batch", b, priors.len())?;
        check_len("goal actor latent", l, self.latent_dim())?;
        check_len("goal actor state width", sd, states.ncols())?;

        let mut input = Array2::zeros((b, sd + 2 * l));
        for (j, p) in priors.iter().enumerate() {
            check_len("goal actor prior", l, p.dim())?;
            let mut row = input.row_mut(j);
            row.slice_mut(s![..sd]).assign(&states.row(j));
            for k in 0..l {
                row[sd + k] = p.mu[k];
                row[sd + l + k] = p.sigma[k];
            }
        }
        let act = mlp_forward_batch(&self.net, input.view())?;
        let mut z = Array2::zeros((b, l));
        for j in 0..b {
            for k in 0..l {
                z[[j, k]] = priors[j].mu[k] + priors[j].sigma[k] * self.range * act.output()[[j, k]];
            }
        }
        let dec_in = concatenate(Axis(1), &[states.view(), z.view()]).expect("same batch");
        let dec = mlp_forward_batch(&model.decoder, dec_in.view())?;
        let val = mlp_forward_batch(&critic.net, dec.output().view())?;
        let objective = val.output().column(0).sum() / b as f64;
        if !objective.is_finite() {
            return Err(Error::NonFinite {
                network: "goal_actor".into(),
            });
        }

        let d_val = Array2::from_elem((b, 1), 1.0 / b as f64);
        let (_, d_goal) = mlp_backward_batch(&critic.net, &val, d_val.view())?;
        let (_, d_dec_in) = mlp_backward_batch(&model.decoder, &dec, d_goal.view())?;
        let mut d_act = Array2::zeros((b, l));
        for j in 0..b {
            for k in 0..l {
                d_act[[j, k]] = d_dec_in[[j, sd + k]] * priors[j].sigma[k] * self.range;
            }
        }
        let (grads, _) = mlp_backward_batch(&self.net, &act, d_act.view())?;
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite {
                network: "goal_actor".into(),
            });
        }
        Ok((objective, grads))
    }

    /// One Adam ascent step; returns the objective before the step.
    pub fn update(
        &mut self,
        model: &CvaeModel,
        critic: &GoalCritic,
        states: ArrayView2<f64>,
        priors: &[GaussianSpec],
        opt: &mut OptimizerState,
    ) -> Result<f64> {
        let (obj, grads) = self.objective_and_grads(model, critic, states, priors)?;
        let neg: Vec<f64> = grads.iter().map(|g| -g).collect();
        adam_step(&mut self.net, &neg, opt, "goal_actor")?;
        Ok(obj)
    }
}
