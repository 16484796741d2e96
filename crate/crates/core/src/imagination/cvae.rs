use ndarray::{concatenate, s, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_len, Error, Result};
use crate::nn::{
    adam_step, gaussian_head, gaussian_head_backward, gaussian_kl, kl_grads, mlp_backward_batch,
    mlp_forward_batch, mlp_layout, Activation, AdamConfig, GaussianSpec, OptimizerState, ParamSet,
    SigmaClamp,
};

/// Encoder `q(z | s_t, s_{t+c})`, prior `p(z | s_t)` and decoder `p(s_{t+c} | s_t, z)`.
///
/// Encoder and prior emit `2L` values: the latent mean, then log-sigma.
#[derive(Debug, Clone, PartialEq)]
pub struct CvaeModel {
    pub encoder: ParamSet,
    pub prior: ParamSet,
    pub decoder: ParamSet,
    pub latent_dim: usize,
    pub horizon: usize,
    pub clamp: SigmaClamp,
}

/// Batch-mean loss split into its two terms; `loss == kl + recon`.
#[derive(Debug, Clone, PartialEq)]
pub struct CvaeLoss {
    pub loss: f64,
    pub kl: f64,
    pub recon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvaeGrads {
    pub encoder: Vec<f64>,
    pub prior: Vec<f64>,
    pub decoder: Vec<f64>,
}

impl CvaeModel {
    pub fn new<R: Rng + ?Sized>(
        state_dim: usize,
        latent_dim: usize,
        horizon: usize,
        hidden: &[usize],
        rng: &mut R,
    ) -> Self {
        let (relu, lin) = (Activation::Relu, Activation::Linear);
        Self {
            encoder: ParamSet::init(mlp_layout(2 * state_dim, hidden, 2 * latent_dim, relu, lin), rng),
            prior: ParamSet::init(mlp_layout(state_dim, hidden, 2 * latent_dim, relu, lin), rng),
            decoder: ParamSet::init(
                mlp_layout(state_dim + latent_dim, hidden, state_dim, relu, lin),
                rng,
            ),
            latent_dim,
            horizon,
            clamp: SigmaClamp::default(),
        }
    }

    /// Reassembles a model from stored networks, checking they fit together.
    pub fn from_parts(encoder: ParamSet, prior: ParamSet, decoder: ParamSet, horizon: usize) -> Result<Self> {
        let state_dim = prior.input_dim().unwrap_or(0);
        let latent2 = prior.output_dim().unwrap_or(0);
        let ok = latent2.is_multiple_of(2)
            && encoder.input_dim() == Some(2 * state_dim)
            && encoder.output_dim() == Some(latent2)
            && decoder.input_dim() == Some(state_dim + latent2 / 2)
            && decoder.output_dim() == Some(state_dim);
        if !ok {
            return Err(Error::LayoutMismatch(
                "encoder, prior and decoder disagree on state or latent size".into(),
            ));
        }
        Ok(Self {
            encoder,
            prior,
            decoder,
            latent_dim: latent2 / 2,
            horizon,
            clamp: SigmaClamp::default(),
        })
    }

    pub fn state_dim(&self) -> usize {
        self.decoder.output_dim().unwrap_or(0)
    }

    pub fn encode(&self, s_t: &[f64], s_future: &[f64]) -> Result<GaussianSpec> {
        check_len("cvae current state", self.state_dim(), s_t.len())?;
        check_len("cvae future state", self.state_dim(), s_future.len())?;
        let input: Vec<f64> = s_t.iter().chain(s_future).copied().collect();
        Ok(gaussian_head(&self.encoder.forward(&input)?, self.clamp))
    }

    pub fn prior(&self, s_t: &[f64]) -> Result<GaussianSpec> {
        check_len("cvae current state", self.state_dim(), s_t.len())?;
        Ok(gaussian_head(&self.prior.forward(s_t)?, self.clamp))
    }

    pub fn prior_batch(&self, states: ArrayView2<f64>) -> Result<Vec<GaussianSpec>> {
        let raw = self.prior.forward_batch(states)?;
        Ok(raw
            .rows()
            .into_iter()
            .map(|r| gaussian_head(r.as_slice().expect("contiguous row"), self.clamp))
            .collect())
    }

    pub fn decode(&self, s_t: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        check_len("cvae current state", self.state_dim(), s_t.len())?;
        check_len("cvae latent", self.latent_dim, z.len())?;
        let input: Vec<f64> = s_t.iter().chain(z).copied().collect();
        self.decoder.forward(&input)
    }

    /// Decodes many latents against the same conditioning state.
    pub fn decode_many(&self, s_t: &[f64], latents: ArrayView2<f64>) -> Result<Array2<f64>> {
        check_len("cvae current state", self.state_dim(), s_t.len())?;
        check_len("cvae latent", self.latent_dim, latents.ncols())?;
        let n = latents.nrows();
        let mut input = Array2::zeros((n, s_t.len() + self.latent_dim));
        for (mut row, z) in input.rows_mut().into_iter().zip(latents.rows()) {
            row.slice_mut(s![..s_t.len()])
                .assign(&ArrayView2::from_shape((1, s_t.len()), s_t).unwrap().row(0));
            row.slice_mut(s![s_t.len()..]).assign(&z);
        }
        self.decoder.forward_batch(input.view())
    }

    /// Loss and exact gradients for a fixed reparameterization noise `eps`
    /// (one row per pair).
    pub fn loss_and_grads_with_noise(
        &self,
        states: ArrayView2<f64>,
        futures: ArrayView2<f64>,
        eps: ArrayView2<f64>,
    ) -> Result<(CvaeLoss, CvaeGrads)> {
        let b = states.nrows();
        if b == 0 {
            return Err(Error::Config("cvae loss needs a nonempty batch".into()));
        }
        let sd = self.state_dim();
        let l = self.latent_dim;
        check_len("cvae state width", sd, states.ncols())?;
        check_len("cvae future width", sd, futures.ncols())?;
        check_len("cvae future batch", b, futures.nrows())?;
        check_len("cvae noise width", l, eps.ncols())?;
        check_len("cvae noise batch", b, eps.nrows())?;
        let bf = b as f64;

        let enc_in = concatenate(Axis(1), &[states.view(), futures.view()]).expect("same batch");
        let enc = mlp_forward_batch(&self.encoder, enc_in.view())?;
        let pri = mlp_forward_batch(&self.prior, states)?;

        let mut z = Array2::zeros((b, l));
        let mut posts = Vec::with_capacity(b);
        let mut priors = Vec::with_capacity(b);
        let mut kl_sum = 0.0;
        for j in 0..b {
            let q = gaussian_head(enc.output().row(j).as_slice().unwrap(), self.clamp);
            let p = gaussian_head(pri.output().row(j).as_slice().unwrap(), self.clamp);
            kl_sum += gaussian_kl(&q, &p)?;
            for k in 0..l {
                z[[j, k]] = q.mu[k] + q.sigma[k] * eps[[j, k]];
            }
            posts.push(q);
            priors.push(p);
        }

        let dec_in = concatenate(Axis(1), &[states.view(), z.view()]).expect("same batch");
        let dec = mlp_forward_batch(&self.decoder, dec_in.view())?;
        let resid = dec.output() - &futures;
        let recon_sum = 0.5 * resid.iter().map(|r| r * r).sum::<f64>();

        let kl = kl_sum / bf;
        let recon = recon_sum / bf;
        let loss = kl + recon;
        if !loss.is_finite() {
            return Err(Error::NonFinite {
                network: "cvae".into(),
            });
        }

        let (g_dec, d_dec_in) = mlp_backward_batch(&self.decoder, &dec, (&resid / bf).view())?;
        let d_z = d_dec_in.slice(s![.., sd..]);

        let mut d_enc_out = Array2::zeros((b, 2 * l));
        let mut d_pri_out = Array2::zeros((b, 2 * l));
        let mut d_mu = vec![0.0; l];
        let mut d_sigma = vec![0.0; l];
        for j in 0..b {
            let g = kl_grads(&posts[j], &priors[j])?;
            for k in 0..l {
                d_mu[k] = g.mu_q[k] / bf + d_z[[j, k]];
                d_sigma[k] = g.sigma_q[k] / bf + d_z[[j, k]] * eps[[j, k]];
            }
            gaussian_head_backward(
                enc.output().row(j).as_slice().unwrap(),
                self.clamp,
                &d_mu,
                &d_sigma,
                d_enc_out.row_mut(j).as_slice_mut().unwrap(),
            );
            for k in 0..l {
                d_mu[k] = g.mu_p[k] / bf;
                d_sigma[k] = g.sigma_p[k] / bf;
            }
            gaussian_head_backward(
                pri.output().row(j).as_slice().unwrap(),
                self.clamp,
                &d_mu,
                &d_sigma,
                d_pri_out.row_mut(j).as_slice_mut().unwrap(),
            );
        }
        let (g_enc, _) = mlp_backward_batch(&self.encoder, &enc, d_enc_out.view())?;
        let (g_pri, _) = mlp_backward_batch(&self.prior, &pri, d_pri_out.view())?;

        Ok((
            CvaeLoss { loss, kl, recon },
            CvaeGrads {
                encoder: g_enc,
                prior: g_pri,
                decoder: g_dec,
            },
        ))
    }

    /// Loss with one standard-normal reparameterized sample per pair.
    pub fn loss_and_grads<R: Rng + ?Sized>(
        &self,
        states: ArrayView2<f64>,
        futures: ArrayView2<f64>,
        rng: &mut R,
    ) -> Result<(CvaeLoss, CvaeGrads)> {
        let eps = Array2::from_shape_simple_fn((states.nrows(), self.latent_dim), || {
            rng.sample::<f64, _>(StandardNormal)
        });
        self.loss_and_grads_with_noise(states, futures, eps.view())
    }
}

/// A CVAE together with its three Adam states.
#[derive(Debug, Clone)]
pub struct CvaeTrainer {
    pub model: CvaeModel,
    opt_encoder: OptimizerState,
    opt_prior: OptimizerState,
    opt_decoder: OptimizerState,
}

impl CvaeTrainer {
    pub fn new(model: CvaeModel, adam: AdamConfig) -> Self {
        Self {
            opt_encoder: OptimizerState::new(model.encoder.len(), adam),
            opt_prior: OptimizerState::new(model.prior.len(), adam),
            opt_decoder: OptimizerState::new(model.decoder.len(), adam),
            model,
        }
    }

    pub fn step<R: Rng + ?Sized>(
        &mut self,
        states: ArrayView2<f64>,
        futures: ArrayView2<f64>,
        rng: &mut R,
    ) -> Result<CvaeLoss> {
        let (loss, grads) = self.model.loss_and_grads(states, futures, rng)?;
        adam_step(
            &mut self.model.encoder,
            &grads.encoder,
            &mut self.opt_encoder,
            "cvae_encoder",
        )?;
        adam_step(
            &mut self.model.prior,
            &grads.prior,
            &mut self.opt_prior,
            "cvae_prior",
        )?;
        adam_step(
            &mut self.model.decoder,
            &grads.decoder,
            &mut self.opt_decoder,
            "cvae_decoder",
        )?;
        Ok(loss)
    }
}
