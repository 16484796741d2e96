//! Dense-network numerics: parameter layouts, MLP forward/backward,
//! diagonal Gaussians, Adam, target blending and checkpoints.
//!
//! Everything here works on 64-bit floats and flat parameter vectors so the
//! higher-level learners can treat any network as "a layout plus a slice".

mod activation;
mod adam;
pub mod checkpoint;
mod gaussian;
mod mlp;
mod params;

pub use activation::Activation;
pub use adam::{adam_step, AdamConfig, OptimizerState};
pub use checkpoint::Checkpoint;
pub use gaussian::{
    gaussian_head, gaussian_head_backward, gaussian_kl, kl_grads, reparam_sample, GaussianSpec, KlGrads,
    SigmaClamp,
};
pub use mlp::{
    mlp_backward, mlp_backward_batch, mlp_forward, mlp_forward_batch, raw_backward_batch, raw_forward_batch,
    ForwardCache,
};
pub use params::{mlp_layout, param_count, soft_update, LayerSpec, ParamSet};
