use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Activation;
use crate::error::{check_len, Error, Result};

/// One dense layer: `y = act(W x + b)` with `W` of shape `(out_dim, in_dim)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            in_dim,
            out_dim,
            activation,
        }
    }

    #[inline]
    pub fn param_count(&self) -> usize {
        self.in_dim * self.out_dim + self.out_dim
    }
}

/// Builds the layout of a plain MLP: `input -> hidden... -> output`.
pub fn mlp_layout(
    input: usize,
    hidden: &[usize],
    output: usize,
    hidden_act: Activation,
    output_act: Activation,
) -> Vec<LayerSpec> {
    let mut layout = Vec::with_capacity(hidden.len() + 1);
    let mut prev = input;
    for &h in hidden {
        layout.push(LayerSpec::new(prev, h, hidden_act));
        prev = h;
    }
    layout.push(LayerSpec::new(prev, output, output_act));
    layout
}

/// Flat parameter vector plus the layer layout that interprets it.
///
/// Per layer the values hold the row-major weight matrix followed by the bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    pub layout: Vec<LayerSpec>,
    pub values: Vec<f64>,
}

impl ParamSet {
    pub fn new(layout: Vec<LayerSpec>, values: Vec<f64>) -> Result<Self> {
        validate_layout(&layout)?;
        check_len("parameter values", layout_len(&layout), values.len())?;
        Ok(Self { layout, values })
    }

    pub fn zeros(layout: Vec<LayerSpec>) -> Self {
        let n = layout_len(&layout);
        Self {
            layout,
            values: vec![0.0; n],
        }
    }

    /// Uniform initialization in `±1/sqrt(fan_in)` for weights and biases.
    pub fn init<R: Rng + ?Sized>(layout: Vec<LayerSpec>, rng: &mut R) -> Self {
        let mut values = Vec::with_capacity(layout_len(&layout));
        for layer in &layout {
            let bound = 1.0 / (layer.in_dim.max(1) as f64).sqrt();
            for _ in 0..layer.param_count() {
                values.push(rng.gen_range(-bound..=bound));
            }
        }
        Self { layout, values }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Input width; `None` for an empty (identity) layout.
    pub fn input_dim(&self) -> Option<usize> {
        self.layout.first().map(|l| l.in_dim)
    }

    pub fn output_dim(&self) -> Option<usize> {
        self.layout.last().map(|l| l.out_dim)
    }

    pub fn same_layout(&self, other: &ParamSet) -> bool {
        self.layout == other.layout
    }
}

pub(crate) fn layout_len(layout: &[LayerSpec]) -> usize {
    layout.iter().map(LayerSpec::param_count).sum()
}

pub(crate) fn validate_layout(layout: &[LayerSpec]) -> Result<()> {
    for pair in layout.windows(2) {
        if pair[0].out_dim != pair[1].in_dim {
            return Err(Error::LayoutMismatch(format!(
                "layer output {} feeds layer input {}",
                pair[0].out_dim, pair[1].in_dim
            )));
        }
    }
    Ok(())
}

/// Exact number of scalar parameters.
pub fn param_count(params: &ParamSet) -> usize {
    layout_len(&params.layout)
}

/// Target-network blending: `target <- (1 - tau) * target + tau * online`.
pub fn soft_update(target: &mut ParamSet, online: &ParamSet, tau: f64) -> Result<()> {
    if !target.same_layout(online) {
        return Err(Error::LayoutMismatch(
            "soft update between networks of different layouts".into(),
        ));
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::Config(format!("tau must lie in [0, 1], got {tau}")));
    }
    for (t, &o) in target.values.iter_mut().zip(&online.values) {
        *t = (1.0 - tau) * *t + tau * o;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn counts_parameters() {
        let one = ParamSet::zeros(vec![LayerSpec::new(2, 3, Activation::Linear)]);
        assert_eq!(param_count(&one), 9);

        let two = ParamSet::zeros(mlp_layout(4, &[8], 2, Activation::Relu, Activation::Linear));
        assert_eq!(param_count(&two), 58);

        assert_eq!(param_count(&ParamSet::zeros(Vec::new())), 0);
    }

    #[test]
    fn rejects_wrong_value_count_and_broken_chain() {
        let layout = vec![LayerSpec::new(2, 2, Activation::Tanh)];
        assert!(ParamSet::new(layout, vec![0.0; 5]).is_err());
        let broken = vec![
            LayerSpec::new(2, 3, Activation::Tanh),
            LayerSpec::new(4, 1, Activation::Linear),
        ];
        assert!(matches!(
            ParamSet::new(broken, vec![0.0; 14]),
            Err(Error::LayoutMismatch(_))
        ));
    }

    #[test]
    fn init_respects_fan_in_bound() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let p = ParamSet::init(vec![LayerSpec::new(16, 4, Activation::Relu)], &mut rng);
        assert!(p.values.iter().all(|v| v.abs() <= 0.25));
    }

    #[test]
    fn soft_update_edge_taus() {
        let layout = vec![LayerSpec::new(1, 1, Activation::Linear)];
        let online = ParamSet::new(layout.clone(), vec![2.0, -3.5]).unwrap();
        let start = ParamSet::new(layout.clone(), vec![0.0, 1.25]).unwrap();

        let mut full = start.clone();
        soft_update(&mut full, &online, 1.0).unwrap();
        assert_eq!(full, online);

        let mut none = start.clone();
        soft_update(&mut none, &online, 0.0).unwrap();
        assert_eq!(none, start);

        let mut mid = start.clone();
        soft_update(&mut mid, &online, 0.5).unwrap();
        assert_eq!(mid.values[0], 1.0);

        let other = ParamSet::zeros(vec![LayerSpec::new(2, 1, Activation::Linear)]);
        assert!(soft_update(&mut mid, &other, 0.5).is_err());
    }

    proptest! {
        #[test]
        fn soft_update_follows_recurrence(
            t in proptest::collection::vec(-5.0f64..5.0, 6),
            o in proptest::collection::vec(-5.0f64..5.0, 6),
            tau in 0.0f64..1.0,
        ) {
            let layout = vec![LayerSpec::new(2, 2, Activation::Linear)];
            let target = ParamSet::new(layout.clone(), t.clone()).unwrap();
            let online = ParamSet::new(layout, o.clone()).unwrap();
            let mut twice = target.clone();
            soft_update(&mut twice, &online, tau).unwrap();
            soft_update(&mut twice, &online, tau).unwrap();
            for i in 0..6 {
                let once = (1.0 - tau) * t[i] + tau * o[i];
                let again = (1.0 - tau) * once + tau * o[i];
                prop_assert_eq!(twice.values[i], again);
            }
        }
    }
}
