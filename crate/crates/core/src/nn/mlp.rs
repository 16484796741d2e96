//! Batched dense forward/backward passes.
//!
//! Inputs are `(batch, features)` matrices. A single vector is a batch of one.
//! An empty layout is the identity map, which lets a policy trunk disappear
//! when the hypernetwork generates the whole network.

use ndarray::{linalg::general_mat_mul, Array2, ArrayView1, ArrayView2, ArrayViewMut2, Axis, Zip};

use super::params::{layout_len, LayerSpec, ParamSet};
use super::Activation;
use crate::error::{check_len, Error, Result};

/// Per-layer activations kept from a forward pass for the matching backward pass.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    /// Input to each layer.
    inputs: Vec<Array2<f64>>,
    /// Pre-activation of each layer.
    pre: Vec<Array2<f64>>,
    output: Array2<f64>,
    filled: bool,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        &self.output
    }

    pub fn into_output(self) -> Array2<f64> {
        self.output
    }

    pub fn pre_activations(&self) -> &[Array2<f64>] {
        &self.pre
    }

    pub fn batch(&self) -> usize {
        self.output.nrows()
    }
}

fn layer_views<'a>(
    layer: &LayerSpec,
    values: &'a [f64],
    offset: usize,
) -> (ArrayView2<'a, f64>, ArrayView1<'a, f64>) {
    let n_w = layer.in_dim * layer.out_dim;
    let w = ArrayView2::from_shape((layer.out_dim, layer.in_dim), &values[offset..offset + n_w])
        .expect("layer weight slice has layout shape");
    let b = ArrayView1::from(&values[offset + n_w..offset + n_w + layer.out_dim]);
    (w, b)
}

/// Forward pass over a borrowed layout and value slice.
pub fn raw_forward_batch(
    layout: &[LayerSpec],
    values: &[f64],
    input: ArrayView2<f64>,
) -> Result<ForwardCache> {
    check_len("parameter values", layout_len(layout), values.len())?;
    if let Some(first) = layout.first() {
        check_len("mlp input", first.in_dim, input.ncols())?;
    }
    let batch = input.nrows();
    let mut inputs = Vec::with_capacity(layout.len());
    let mut pre = Vec::with_capacity(layout.len());
    let mut x = input.to_owned();
    let mut offset = 0;
    for layer in layout {
        let (w, b) = layer_views(layer, values, offset);
        let mut z = Array2::zeros((batch, layer.out_dim));
        general_mat_mul(1.0, &x, &w.t(), 0.0, &mut z);
        z += &b;
        let act = layer.activation;
        let y = if act == Activation::Linear {
            z.clone()
        } else {
            z.mapv(|v| act.apply(v))
        };
        inputs.push(x);
        pre.push(z);
        x = y;
        offset += layer.param_count();
    }
    Ok(ForwardCache {
        inputs,
        pre,
        output: x,
        filled: true,
    })
}

/// Reverse pass. Returns the parameter gradient (summed over the batch, aligned
/// with `values`) and the gradient with respect to the input.
pub fn raw_backward_batch(
    layout: &[LayerSpec],
    values: &[f64],
    cache: &ForwardCache,
    output_grad: ArrayView2<f64>,
) -> Result<(Vec<f64>, Array2<f64>)> {
    if !cache.filled {
        return Err(Error::MissingCache);
    }
    check_len("parameter values", layout_len(layout), values.len())?;
    if cache.pre.len() != layout.len() || cache.pre.iter().zip(layout).any(|(z, l)| z.ncols() != l.out_dim) {
        return Err(Error::LayoutMismatch(
            "forward cache was produced by a different network".into(),
        ));
    }
    check_len("output gradient width", cache.output.ncols(), output_grad.ncols())?;
    check_len("output gradient batch", cache.output.nrows(), output_grad.nrows())?;

    let mut grads = vec![0.0; values.len()];
    let mut offsets = Vec::with_capacity(layout.len());
    let mut off = 0;
    for layer in layout {
        offsets.push(off);
        off += layer.param_count();
    }

    let mut g = output_grad.to_owned();
    for (l, layer) in layout.iter().enumerate().rev() {
        let y = if l + 1 < layout.len() {
            &cache.inputs[l + 1]
        } else {
            &cache.output
        };
        let act = layer.activation;
        if act != Activation::Linear {
            Zip::from(&mut g)
                .and(&cache.pre[l])
                .and(y)
                .for_each(|g, &z, &y| *g *= act.derivative(z, y));
        }
        let n_w = layer.in_dim * layer.out_dim;
        let (w_grad, rest) = grads[offsets[l]..].split_at_mut(n_w);
        let mut w_grad = ArrayViewMut2::from_shape((layer.out_dim, layer.in_dim), w_grad)
            .expect("gradient slice has layout shape");
        general_mat_mul(1.0, &g.t(), &cache.inputs[l], 0.0, &mut w_grad);
        for (b, s) in rest[..layer.out_dim].iter_mut().zip(g.sum_axis(Axis(0))) {
            *b = s;
        }
        let (w, _) = layer_views(layer, values, offsets[l]);
        let mut dx = Array2::zeros((g.nrows(), layer.in_dim));
        general_mat_mul(1.0, &g, &w, 0.0, &mut dx);
        g = dx;
    }
    Ok((grads, g))
}

pub fn mlp_forward_batch(params: &ParamSet, input: ArrayView2<f64>) -> Result<ForwardCache> {
    raw_forward_batch(&params.layout, &params.values, input)
}

pub fn mlp_backward_batch(
    params: &ParamSet,
    cache: &ForwardCache,
    output_grad: ArrayView2<f64>,
) -> Result<(Vec<f64>, Array2<f64>)> {
    raw_backward_batch(&params.layout, &params.values, cache, output_grad)
}

/// Single-sample forward pass; the cache feeds [`mlp_backward`].
pub fn mlp_forward(params: &ParamSet, input: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
    let x = ArrayView2::from_shape((1, input.len()), input).expect("row vector");
    let cache = mlp_forward_batch(params, x)?;
    let out = cache.output.row(0).to_vec();
    Ok((out, cache))
}

/// Single-sample backward pass: `(param_grad, input_grad)`.
pub fn mlp_backward(
    params: &ParamSet,
    cache: &ForwardCache,
    output_grad: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let g = ArrayView2::from_shape((1, output_grad.len()), output_grad).expect("row vector");
    let (pg, ig) = mlp_backward_batch(params, cache, g)?;
    Ok((pg, ig.row(0).to_vec()))
}

impl ParamSet {
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        mlp_forward(self, input).map(|(y, _)| y)
    }

    pub fn forward_batch(&self, input: ArrayView2<f64>) -> Result<Array2<f64>> {
        mlp_forward_batch(self, input).map(ForwardCache::into_output)
    }
}
