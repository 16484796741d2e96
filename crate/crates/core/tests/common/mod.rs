#![allow(dead_code)]

use magi_core::imagination::{CvaeModel, GoalActor, GoalCritic};
use magi_core::nn::{mlp_backward_batch, mlp_forward_batch, Activation, LayerSpec, ParamSet};
use magi_core::policy::{AgentLearner, CentralBatch, CentralLearner, HyperMode, LearnerConfig};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const STEP: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;

/// Navigation sizes: global state 18, observation 14.
pub const S: usize = 18;
pub const O: usize = 14;
pub const L: usize = 8;
pub const HIDDEN: [usize; 2] = [64, 64];
const BATCH: usize = 4;

/// `||a - n|| / max(||a||, ||n||)`, zero when both vanish.
pub fn rel_error(a: &[f64], n: &[f64]) -> f64 {
    let diff = a.iter().zip(n).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nn = n.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = na.max(nn);
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Most coordinates checked per network; larger nets use a seeded subset.
pub const MAX_COORDS: usize = 1500;

/// Coordinates to check for a network with `n` parameters.
pub fn coords(n: usize, seed: u64) -> Vec<usize> {
    if n <= MAX_COORDS {
        return (0..n).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ n as u64);
    rand::seq::index::sample(&mut rng, n, MAX_COORDS).into_vec()
}

/// Central differences of `loss` at the given coordinates of `slot`.
pub fn numeric<M>(
    model: &mut M,
    slot: fn(&mut M) -> &mut Vec<f64>,
    loss: &dyn Fn(&M) -> f64,
    at: &[usize],
) -> Vec<f64> {
    let mut out = Vec::with_capacity(at.len());
    for &k in at {
        let orig = slot(model)[k];
        slot(model)[k] = orig + STEP;
        let up = loss(model);
        slot(model)[k] = orig - STEP;
        let down = loss(model);
        slot(model)[k] = orig;
        out.push((up - down) / (2.0 * STEP));
    }
    out
}

/// Relative error between the analytic gradient and central differences.
pub fn check<M>(
    model: &mut M,
    slot: fn(&mut M) -> &mut Vec<f64>,
    loss: &dyn Fn(&M) -> f64,
    analytic: &[f64],
    seed: u64,
) -> f64 {
    let at = coords(analytic.len(), seed);
    let a: Vec<f64> = at.iter().map(|&k| analytic[k]).collect();
    rel_error(&a, &numeric(model, slot, loss, &at))
}

fn mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Array2<f64> {
    Array2::from_shape_fn((r, c), |_| rng.gen_range(-1.0..1.0))
}

fn enc(m: &mut CvaeModel) -> &mut Vec<f64> {
    &mut m.encoder.values
}
fn pri(m: &mut CvaeModel) -> &mut Vec<f64> {
    &mut m.prior.values
}
fn dec(m: &mut CvaeModel) -> &mut Vec<f64> {
    &mut m.decoder.values
}
fn gcrit(m: &mut GoalCritic) -> &mut Vec<f64> {
    &mut m.net.values
}
fn gact(m: &mut GoalActor) -> &mut Vec<f64> {
    &mut m.net.values
}
fn trunk(m: &mut AgentLearner) -> &mut Vec<f64> {
    &mut m.policy.trunk.values
}
fn hyper(m: &mut AgentLearner) -> &mut Vec<f64> {
    &mut m.policy.hyper.values
}
fn acrit(m: &mut AgentLearner) -> &mut Vec<f64> {
    &mut m.critic.values
}
fn cpol(m: &mut CentralLearner) -> &mut Vec<f64> {
    &mut m.policy.values
}
fn ccrit(m: &mut CentralLearner) -> &mut Vec<f64> {
    &mut m.critic.values
}
fn plain(m: &mut ParamSet) -> &mut Vec<f64> {
    &mut m.values
}

/// Relative errors of every trainable network for one seed.
pub fn gradient_suite(seed: u64) -> Vec<(&'static str, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    // Plain MLP covering every activation.
    let layout = vec![
        LayerSpec::new(5, 7, Activation::Tanh),
        LayerSpec::new(7, 6, Activation::Sigmoid),
        LayerSpec::new(6, 6, Activation::Relu),
        LayerSpec::new(6, 3, Activation::Linear),
    ];
    let mut net = ParamSet::init(layout, &mut rng);
    let x = mat(&mut rng, BATCH, 5);
    let w = mat(&mut rng, BATCH, 3);
    let f = |p: &ParamSet| (p.forward_batch(x.view()).unwrap() * &w).sum();
    let cache = mlp_forward_batch(&net, x.view()).unwrap();
    let (g, _) = mlp_backward_batch(&net, &cache, w.view()).unwrap();
    out.push(("mlp_mixed_activations", check(&mut net, plain, &f, &g, seed)));

    // CVAE at a fixed reparameterization noise.
    let mut model = CvaeModel::new(S, L, 4, &HIDDEN, &mut rng);
    let s = mat(&mut rng, BATCH, S);
    let fut = mat(&mut rng, BATCH, S);
    let eps = Array2::from_shape_fn((BATCH, L), |_| rng.sample::<f64, _>(rand_distr::StandardNormal));
    let loss = |m: &CvaeModel| {
        m.loss_and_grads_with_noise(s.view(), fut.view(), eps.view())
            .unwrap()
            .0
            .loss
    };
    let (_, g) = model
        .loss_and_grads_with_noise(s.view(), fut.view(), eps.view())
        .unwrap();
    out.push(("cvae_encoder", check(&mut model, enc, &loss, &g.encoder, seed)));
    out.push(("cvae_prior", check(&mut model, pri, &loss, &g.prior, seed)));
    out.push(("cvae_decoder", check(&mut model, dec, &loss, &g.decoder, seed)));

    // Goal critic regression onto per-agent values.
    let mut critic = GoalCritic::new(S, &HIDDEN, &mut rng);
    let q = mat(&mut rng, BATCH, 3);
    let loss = |c: &GoalCritic| c.loss_and_grads(s.view(), q.view()).unwrap().0;
    let (_, g) = critic.loss_and_grads(s.view(), q.view()).unwrap();
    out.push(("goal_critic", check(&mut critic, gcrit, &loss, &g, seed)));

    // Goal actor through the frozen decoder and critic.
    let mut actor = GoalActor::new(S, L, &HIDDEN, 2.0, &mut rng);
    let priors = model.prior_batch(s.view()).unwrap();
    let obj = |a: &GoalActor| {
        a.objective_and_grads(&model, &critic, s.view(), &priors)
            .unwrap()
            .0
    };
    let (_, g) = actor
        .objective_and_grads(&model, &critic, s.view(), &priors)
        .unwrap();
    out.push(("goal_actor", check(&mut actor, gact, &obj, &g, seed)));

    // Agent policy (trunk + hypernet) and critic, in both hypernet modes.
    for (mode, tag_trunk, tag_hyper, tag_critic) in [
        (HyperMode::Head, "policy_trunk", "policy_hypernet", "agent_critic"),
        (
            HyperMode::Full,
            "policy_trunk_full",
            "policy_hypernet_full",
            "agent_critic_full",
        ),
    ] {
        let cfg = LearnerConfig {
            hyper_mode: mode,
            ..LearnerConfig::default()
        };
        let mut learner = AgentLearner::new(O, S, 2, cfg, &mut rng);
        let obs = mat(&mut rng, BATCH, O);
        let goals = mat(&mut rng, BATCH, S);
        let obj = |l: &AgentLearner| {
            l.policy_objective_and_grads(s.view(), obs.view(), goals.view())
                .unwrap()
                .0
        };
        let (_, g) = learner
            .policy_objective_and_grads(s.view(), obs.view(), goals.view())
            .unwrap();
        out.push((tag_trunk, check(&mut learner, trunk, &obj, &g.trunk, seed)));
        out.push((tag_hyper, check(&mut learner, hyper, &obj, &g.hyper, seed)));

        let acts = mat(&mut rng, BATCH, 2);
        let y: Vec<f64> = (0..BATCH).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let loss = |l: &AgentLearner| l.critic_loss_with_targets(s.view(), acts.view(), &y).unwrap().0;
        let (_, g) = learner
            .critic_loss_with_targets(s.view(), acts.view(), &y)
            .unwrap();
        out.push((tag_critic, check(&mut learner, acrit, &loss, &g, seed)));
    }

    // Centralized baseline.
    let mut central = CentralLearner::new(3 * O, S, 6, LearnerConfig::default(), &mut rng);
    let batch = CentralBatch {
        states: s.clone(),
        obs: mat(&mut rng, BATCH, 3 * O),
        actions: mat(&mut rng, BATCH, 6),
        rewards: (0..BATCH).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        next_states: mat(&mut rng, BATCH, S),
        next_obs: mat(&mut rng, BATCH, 3 * O),
        dones: vec![0.0, 1.0, 0.0, 0.0],
    };
    let loss = |c: &CentralLearner| c.critic_loss_and_grads(&batch).unwrap().0;
    let (_, g) = central.critic_loss_and_grads(&batch).unwrap();
    out.push(("central_critic", check(&mut central, ccrit, &loss, &g, seed)));
    let obj = |c: &CentralLearner| {
        c.policy_objective_and_grads(s.view(), batch.obs.view())
            .unwrap()
            .0
    };
    let (_, g) = central
        .policy_objective_and_grads(s.view(), batch.obs.view())
        .unwrap();
    out.push(("central_policy", check(&mut central, cpol, &obj, &g, seed)));

    out
}
