//! Diagonal Gaussians over the latent space.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl GaussianSpec {
    pub fn new(mu: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        let g = Self { mu, sigma };
        g.validate()?;
        Ok(g)
    }

    pub fn standard(dim: usize) -> Self {
        Self {
            mu: vec![0.0; dim],
            sigma: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn validate(&self) -> Result<()> {
        check_len("gaussian sigma", self.mu.len(), self.sigma.len())?;
        if let Some(s) = self.sigma.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidGaussian(format!(
                "sigma must be finite and strictly positive, got {s}"
            )));
        }
        Ok(())
    }
}

/// Closed-form `KL[q || p]` for diagonal Gaussians.
pub fn gaussian_kl(q: &GaussianSpec, p: &GaussianSpec) -> Result<f64> {
    q.validate()?;
    p.validate()?;
    check_len("gaussian kl", q.dim(), p.dim())?;
    let mut kl = 0.0;
    for i in 0..q.dim() {
        let (mq, sq, mp, sp) = (q.mu[i], q.sigma[i], p.mu[i], p.sigma[i]);
        let d = mq - mp;
        kl += (sp / sq).ln() + (sq * sq + d * d) / (2.0 * sp * sp) - 0.5;
    }
    Ok(kl)
}

/// Partial derivatives of `KL[q || p]` with respect to both parameter sets.
#[derive(Debug, Clone, PartialEq)]
pub struct KlGrads {
    pub mu_q: Vec<f64>,
    pub sigma_q: Vec<f64>,
    pub mu_p: Vec<f64>,
    pub sigma_p: Vec<f64>,
}

pub fn kl_grads(q: &GaussianSpec, p: &GaussianSpec) -> Result<KlGrads> {
    check_len("gaussian kl", q.dim(), p.dim())?;
    let n = q.dim();
    let mut out = KlGrads {
        mu_q: vec![0.0; n],
        sigma_q: vec![0.0; n],
        mu_p: vec![0.0; n],
        sigma_p: vec![0.0; n],
    };
    for i in 0..n {
        let (mq, sq, mp, sp) = (q.mu[i], q.sigma[i], p.mu[i], p.sigma[i]);
        let d = mq - mp;
        let vp = sp * sp;
        out.mu_q[i] = d / vp;
        out.mu_p[i] = -d / vp;
        out.sigma_q[i] = -1.0 / sq + sq / vp;
        out.sigma_p[i] = 1.0 / sp - (sq * sq + d * d) / (vp * sp);
    }
    Ok(out)
}

/// `z = mu + sigma * epsilon`.
pub fn reparam_sample(g: &GaussianSpec, epsilon: &[f64]) -> Result<Vec<f64>> {
    check_len("reparameterization noise", g.dim(), epsilon.len())?;
    Ok(g.mu
        .iter()
        .zip(&g.sigma)
        .zip(epsilon)
        .map(|((m, s), e)| m + s * e)
        .collect())
}

/// Bounds on the log-sigma head output; sigma is `exp(clamp(raw))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaClamp {
    pub log_min: f64,
    pub log_max: f64,
}

impl Default for SigmaClamp {
    fn default() -> Self {
        Self {
            log_min: -5.0,
            log_max: 2.0,
        }
    }
}

/// Splits a `2L` network output into a Gaussian: first half mean, second half log-sigma.
pub fn gaussian_head(raw: &[f64], clamp: SigmaClamp) -> GaussianSpec {
    let l = raw.len() / 2;
    GaussianSpec {
        mu: raw[..l].to_vec(),
        sigma: raw[l..2 * l]
            .iter()
            .map(|&r| r.clamp(clamp.log_min, clamp.log_max).exp())
            .collect(),
    }
}

/// Pulls `(dL/dmu, dL/dsigma)` back onto the raw head output.
pub fn gaussian_head_backward(
    raw: &[f64],
    clamp: SigmaClamp,
    d_mu: &[f64],
    d_sigma: &[f64],
    out: &mut [f64],
) {
    let l = raw.len() / 2;
    out[..l].copy_from_slice(d_mu);
    for i in 0..l {
        let r = raw[l + i];
        out[l + i] = if r > clamp.log_min && r < clamp.log_max {
            d_sigma[i] * r.exp()
        } else {
            0.0
        };
    }
}
