use serde::{Deserialize, Serialize};

use super::ParamSet;
use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam moment estimates for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
    pub config: AdamConfig,
}

impl OptimizerState {
    pub fn new(n_params: usize, config: AdamConfig) -> Self {
        Self {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            step: 0,
            config,
        }
    }
}

/// One bias-corrected Adam step that *descends* along `grads`.
///
/// `network` names the parameters in the error raised for non-finite gradients.
pub fn adam_step(
    params: &mut ParamSet,
    grads: &[f64],
    state: &mut OptimizerState,
    network: &str,
) -> Result<()> {
    check_len(network, params.len(), grads.len())?;
    check_len(network, params.len(), state.m.len())?;
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite {
            network: network.to_owned(),
        });
    }
    let AdamConfig {
        lr,
        beta1,
        beta2,
        eps,
    } = state.config;
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - beta1.powi(t);
    let bc2 = 1.0 - beta2.powi(t);
    for (((p, &g), m), v) in params
        .values
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, LayerSpec};

    fn scalar(v: f64) -> ParamSet {
        // a 0->1 layer holds exactly one bias
        ParamSet::new(vec![LayerSpec::new(0, 1, Activation::Linear)], vec![v]).unwrap()
    }

    #[test]
    fn zero_grads_leave_params_unchanged() {
        let mut p = scalar(0.75);
        let mut s = OptimizerState::new(1, AdamConfig::default());
        adam_step(&mut p, &[0.0], &mut s, "test").unwrap();
        assert_eq!(p.values, vec![0.75]);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut p = scalar(1.0);
        let mut s = OptimizerState::new(1, AdamConfig::with_lr(0.1));
        adam_step(&mut p, &[1.0], &mut s, "test").unwrap();
        // m_hat = 1, v_hat = 1, so the step is lr / (1 + eps)
        assert!((p.values[0] - 0.9).abs() < 1e-7);
    }

    #[test]
    fn identical_calls_are_bitwise_identical() {
        let mut a = scalar(0.3);
        let mut b = scalar(0.3);
        let mut sa = OptimizerState::new(1, AdamConfig::default());
        let mut sb = sa.clone();
        for g in [0.4, -1.3, 2.2] {
            adam_step(&mut a, &[g], &mut sa, "a").unwrap();
            adam_step(&mut b, &[g], &mut sb, "b").unwrap();
        }
        assert_eq!(a.values[0].to_bits(), b.values[0].to_bits());
        assert_eq!(sa, sb);
    }

    #[test]
    fn non_finite_gradient_names_network() {
        let mut p = scalar(0.0);
        let mut s = OptimizerState::new(1, AdamConfig::default());
        let err = adam_step(&mut p, &[f64::NAN], &mut s, "goal_critic").unwrap_err();
        assert!(err.to_string().contains("goal_critic"));
        assert_eq!(s.step, 0);
    }
}
