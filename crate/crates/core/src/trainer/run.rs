use std::time::Instant;

use ndarray::{s, Array2, ArrayView1};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::envs::{extract_agent_position, observation_len, observe, StateLayout, World, WorldConfig};
use crate::error::Result;
use crate::imagination::{GoalSample, GoalStrategy};
use crate::nn::{adam_step, AdamConfig, Checkpoint, OptimizerState};
use crate::policy::{
    intrinsic_reward_euclidean, intrinsic_reward_latent, proxy_reward, AgentBatch, CentralBatch,
    IntrinsicVariant,
};

use super::models::{stream_rng, Models, Stream};
use super::{Backbone, MetricsRow, ReplayBuffer, RunConfig, TimingRow, Transition};

/// Bookkeeping over every horizon pair handed to the CVAE.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PairAudit {
    pub checked: u64,
    pub violations: u64,
}

#[derive(Debug, Default)]
struct Accum {
    train_returns: Vec<f64>,
    intrinsic_sum: f64,
    intrinsic_n: u64,
    cvae: (f64, u64),
    goal_critic: (f64, u64),
    critics: Vec<(f64, u64)>,
}

fn mean(x: (f64, u64)) -> f64 {
    if x.1 == 0 {
        f64::NAN
    } else {
        x.0 / x.1 as f64
    }
}

/// Evaluation summary over noise-free episodes, external reward only.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalStats {
    pub mean: f64,
    pub std: f64,
    pub returns: Vec<f64>,
}

/// One training run in progress.
pub struct Trainer {
    cfg: RunConfig,
    world: World,
    layout: StateLayout,
    models: Models,
    opt_goal_critic: OptimizerState,
    opt_goal_actor: OptimizerState,
    replay: ReplayBuffer,
    rng_env: ChaCha8Rng,
    rng_explore: ChaCha8Rng,
    rng_replay: ChaCha8Rng,
    rng_imagine: ChaCha8Rng,
    rng_cvae: ChaCha8Rng,
    step: u64,
    episode: u64,
    goal: GoalSample,
    goal_age: usize,
    episode_return: f64,
    acc: Accum,
    audit: PairAudit,
    started: Instant,
}

/// Result of [`train`].
#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub metrics: Vec<MetricsRow>,
    pub timing: Vec<TimingRow>,
    pub checkpoint: Checkpoint,
    pub audit: PairAudit,
    pub n_critics: usize,
}

impl Trainer {
    pub fn new(cfg: RunConfig) -> Result<Self> {
        cfg.validate()?;
        let wc = cfg.world();
        let mut world = World::new(wc.clone())?;
        let layout = StateLayout::new(&wc);
        let models = Models::new(&cfg, &wc);
        let mut rng_env = stream_rng(cfg.seed, Stream::Env);
        world.reset(rng_env.gen());
        let goal = GoalSample::constant(&models.goal_critic)?;
        Ok(Self {
            opt_goal_critic: OptimizerState::new(
                models.goal_critic.net.len(),
                AdamConfig::with_lr(cfg.goal_critic_lr),
            ),
            opt_goal_actor: OptimizerState::new(
                models.goal_actor.net.len(),
                AdamConfig::with_lr(cfg.goal_actor_lr),
            ),
            replay: ReplayBuffer::new(cfg.replay_capacity, cfg.horizon)?,
            rng_explore: stream_rng(cfg.seed, Stream::Explore),
            rng_replay: stream_rng(cfg.seed, Stream::Replay),
            rng_imagine: stream_rng(cfg.seed, Stream::Imagine),
            rng_cvae: stream_rng(cfg.seed, Stream::Cvae),
            rng_env,
            acc: Accum {
                critics: vec![(0.0, 0); models.n_critics()],
                ..Accum::default()
            },
            world,
            layout,
            models,
            cfg,
            step: 0,
            episode: 0,
            goal,
            goal_age: 0,
            episode_return: 0.0,
            audit: PairAudit::default(),
            started: Instant::now(),
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn models(&self) -> &Models {
        &self.models
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn replay(&self) -> &ReplayBuffer {
        &self.replay
    }

    pub fn audit(&self) -> PairAudit {
        self.audit
    }

    /// Goal currently fed to the policies.
    pub fn goal(&self) -> &GoalSample {
        &self.goal
    }

    /// One environment step plus, after warmup, one round of updates.
    /// Returns a metrics row at evaluation points.
    pub fn step(&mut self) -> Result<Option<(MetricsRow, TimingRow)>> {
        let wc = self.world.config().clone();
        if self.goal_age.is_multiple_of(self.cfg.goal_refresh) {
            self.goal = self
                .models
                .choose_goal(&self.cfg, self.world.state(), &mut self.rng_imagine)?;
        }
        self.goal_age += 1;

        let state = self.world.state().0.clone();
        let actions: Vec<[f64; 2]> = if self.step < self.cfg.warmup {
            (0..wc.n_agents)
                .map(|_| {
                    [
                        self.rng_explore.gen_range(-1.0..=1.0),
                        self.rng_explore.gen_range(-1.0..=1.0),
                    ]
                })
                .collect()
        } else {
            let std = self.cfg.noise_std(self.step);
            self.models
                .joint_action(&wc, &state, &self.goal.goal, std, &mut self.rng_explore)?
        };
        let res = self.world.step(&actions, None)?;

        let intrinsic = self.intrinsic(&state, &res.state)?;
        for r in &intrinsic {
            self.acc.intrinsic_sum += r;
            self.acc.intrinsic_n += 1;
        }
        self.replay.push(Transition {
            actions: actions.iter().flatten().copied().collect(),
            reward: res.reward,
            intrinsic,
            next_state: res.state.0.clone(),
            done: res.terminal,
            goal: self.goal.goal.clone(),
            episode: self.episode,
            step: self.world.steps() - 1,
            state,
        });
        self.episode_return += res.reward;
        if res.terminal {
            self.acc.train_returns.push(self.episode_return);
            self.episode_return = 0.0;
            self.episode += 1;
            self.world.reset(self.rng_env.gen());
            self.goal_age = 0;
        }
        self.step += 1;

        if self.step > self.cfg.warmup {
            self.update()?;
        }
        if self.step.is_multiple_of(self.cfg.eval_period) {
            return Ok(Some(self.metrics_row()?));
        }
        Ok(None)
    }

    fn intrinsic(&self, s_t: &[f64], s_next: &[f64]) -> Result<Vec<f64>> {
        let n = self.layout.n_agents;
        if self.models.backbone != Backbone::Magi {
            return Ok(vec![0.0; n]);
        }
        let g = &self.goal.goal;
        match self.cfg.intrinsic {
            IntrinsicVariant::Euclidean => (0..n)
                .map(|i| intrinsic_reward_euclidean(&self.layout, g, s_t, s_next, i))
                .collect(),
            IntrinsicVariant::LatentKl => {
                let r = intrinsic_reward_latent(&self.models.cvae.model, g, s_t, s_next)?;
                Ok(vec![r; n])
            }
        }
    }

    fn update(&mut self) -> Result<()> {
        let wc = self.world.config().clone();
        let n = wc.n_agents;
        let sd = self.layout.len();
        let od = observation_len(&wc);
        let bs = self.cfg.batch_size;
        let batch = match self.replay.sample(bs, &mut self.rng_replay) {
            Some(b) => b,
            None => return Ok(()),
        };
        let mut states = Array2::zeros((bs, sd));
        let mut next_states = Array2::zeros((bs, sd));
        let mut goals = Array2::zeros((bs, sd));
        let mut actions = Array2::zeros((bs, 2 * n));
        let mut obs = vec![Array2::zeros((bs, od)); n];
        let mut next_obs = vec![Array2::zeros((bs, od)); n];
        let mut ext = Vec::with_capacity(bs);
        let mut intr = Array2::zeros((bs, n));
        let mut dones = Vec::with_capacity(bs);
        for (j, t) in batch.iter().enumerate() {
            states.row_mut(j).assign(&ArrayView1::from(&t.state));
            next_states.row_mut(j).assign(&ArrayView1::from(&t.next_state));
            goals.row_mut(j).assign(&ArrayView1::from(&t.goal));
            actions.row_mut(j).assign(&ArrayView1::from(&t.actions));
            intr.row_mut(j).assign(&ArrayView1::from(&t.intrinsic));
            for i in 0..n {
                obs[i]
                    .row_mut(j)
                    .assign(&ArrayView1::from(&observe(&wc, &t.state, i)?));
                next_obs[i]
                    .row_mut(j)
                    .assign(&ArrayView1::from(&observe(&wc, &t.next_state, i)?));
            }
            ext.push(t.reward);
            dones.push(if t.done { 1.0 } else { 0.0 });
        }

        if let Some(central) = &mut self.models.central {
            let joint = |parts: &[Array2<f64>]| {
                let views: Vec<_> = parts.iter().map(|p| p.view()).collect();
                ndarray::concatenate(ndarray::Axis(1), &views).expect("same batch")
            };
            let cb = CentralBatch {
                states,
                obs: joint(&obs),
                actions,
                rewards: ext,
                next_states,
                next_obs: joint(&next_obs),
                dones,
            };
            let (loss, _) = central.update(&cb)?;
            self.acc.critics[0].0 += loss;
            self.acc.critics[0].1 += 1;
            return Ok(());
        }

        if self.models.backbone == Backbone::Magi {
            if self.step.is_multiple_of(self.cfg.cvae_period) {
                if let Some(h) = self.replay.sample_horizon_pairs(bs, &mut self.rng_cvae) {
                    for &(a, b) in &h.pairs {
                        let (x, y) = (self.replay.get(a), self.replay.get(b));
                        self.audit.checked += 1;
                        let ok = matches!((x, y), (Some(x), Some(y))
                            if x.episode == y.episode && y.step == x.step + self.cfg.horizon);
                        if !ok {
                            self.audit.violations += 1;
                        }
                    }
                    let loss =
                        self.models
                            .cvae
                            .step(h.states.view(), h.futures.view(), &mut self.rng_cvae)?;
                    self.acc.cvae.0 += loss.loss;
                    self.acc.cvae.1 += 1;
                }
            }
            let mut q = Array2::zeros((bs, n));
            for (i, agent) in self.models.agents.iter().enumerate() {
                let qi = agent.q_values(states.view(), actions.slice(s![.., 2 * i..2 * i + 2]))?;
                q.column_mut(i).assign(&ArrayView1::from(&qi));
            }
            let (loss, g) = self.models.goal_critic.loss_and_grads(states.view(), q.view())?;
            adam_step(
                &mut self.models.goal_critic.net,
                &g,
                &mut self.opt_goal_critic,
                "goal_critic",
            )?;
            self.acc.goal_critic.0 += loss;
            self.acc.goal_critic.1 += 1;
            if self.cfg.goal_strategy == GoalStrategy::Deterministic {
                let priors = self.models.cvae.model.prior_batch(states.view())?;
                let Models {
                    cvae,
                    goal_critic,
                    goal_actor,
                    ..
                } = &mut self.models;
                goal_actor.update(
                    &cvae.model,
                    goal_critic,
                    states.view(),
                    &priors,
                    &mut self.opt_goal_actor,
                )?;
            }
        }

        let lambda = match self.models.backbone {
            Backbone::Magi => self.cfg.lambda,
            _ => 0.0,
        };
        let (obs, next_obs) = (obs, next_obs);
        for (i, (agent, (o, no))) in self
            .models
            .agents
            .iter_mut()
            .zip(obs.into_iter().zip(next_obs))
            .enumerate()
        {
            let rewards = (0..bs)
                .map(|j| proxy_reward(ext[j], intr[[j, i]], lambda))
                .collect();
            let ab = AgentBatch {
                states: states.clone(),
                obs: o,
                actions: actions.slice(s![.., 2 * i..2 * i + 2]).to_owned(),
                rewards,
                next_states: next_states.clone(),
                next_obs: no,
                dones: dones.clone(),
                goals: goals.clone(),
            };
            let (loss, _) = agent.update(&ab)?;
            self.acc.critics[i].0 += loss;
            self.acc.critics[i].1 += 1;
        }
        Ok(())
    }

    fn metrics_row(&mut self) -> Result<(MetricsRow, TimingRow)> {
        let eval = evaluate_models(
            &self.models,
            &self.cfg,
            self.cfg.eval_episodes,
            eval_seed(self.cfg.seed),
        )?;
        let acc = std::mem::replace(
            &mut self.acc,
            Accum {
                critics: vec![(0.0, 0); self.models.n_critics()],
                ..Accum::default()
            },
        );
        let train_return = if acc.train_returns.is_empty() {
            f64::NAN
        } else {
            acc.train_returns.iter().sum::<f64>() / acc.train_returns.len() as f64
        };
        let row = MetricsRow {
            step: self.step,
            eval_return: eval.mean,
            eval_return_std: eval.std,
            train_return,
            intrinsic_mean: mean((acc.intrinsic_sum, acc.intrinsic_n)),
            cvae_loss: mean(acc.cvae),
            goal_critic_loss: mean(acc.goal_critic),
            critic_loss: acc.critics.iter().map(|c| mean(*c)).collect(),
        };
        let timing = TimingRow {
            step: self.step,
            wall_seconds: self.started.elapsed().as_secs_f64(),
        };
        Ok((row, timing))
    }

    pub fn checkpoint(&self) -> Checkpoint {
        self.models.to_checkpoint()
    }

    pub fn into_models(self) -> Models {
        self.models
    }
}

/// Seed of the fixed evaluation episodes used at every metrics point.
pub fn eval_seed(run_seed: u64) -> u64 {
    run_seed ^ 0x5eed_e7a1_0000_0000
}

/// Full training run; `on_row` sees each metrics row as it is produced.
pub fn train_with(cfg: &RunConfig, mut on_row: impl FnMut(&MetricsRow, &TimingRow)) -> Result<TrainOutput> {
    let mut t = Trainer::new(cfg.clone())?;
    let mut metrics = Vec::new();
    let mut timing = Vec::new();
    while t.steps() < cfg.total_steps {
        if let Some((row, time)) = t.step()? {
            on_row(&row, &time);
            metrics.push(row);
            timing.push(time);
        }
    }
    Ok(TrainOutput {
        n_critics: t.models.n_critics(),
        checkpoint: t.checkpoint(),
        audit: t.audit,
        metrics,
        timing,
    })
}

pub fn train(cfg: &RunConfig) -> Result<TrainOutput> {
    train_with(cfg, |_, _| {})
}

/// Noise-free rollouts of the given models; returns external-reward
/// statistics. Deterministic given `seed`.
pub fn evaluate_models(models: &Models, cfg: &RunConfig, episodes: usize, seed: u64) -> Result<EvalStats> {
    let wc = cfg.world();
    let mut world = World::new(wc.clone())?;
    let mut rng_env = stream_rng(seed, Stream::EvalEnv);
    let mut rng_img = stream_rng(seed, Stream::EvalImagine);
    let mut returns = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        world.reset(rng_env.gen());
        let mut goal = models.choose_goal(cfg, world.state(), &mut rng_img)?;
        let mut total = 0.0;
        for t in 0.. {
            if t > 0 && t % cfg.goal_refresh == 0 {
                goal = models.choose_goal(cfg, world.state(), &mut rng_img)?;
            }
            let a = models.joint_action(&wc, world.state(), &goal.goal, 0.0, &mut rng_img)?;
            let r = world.step(&a, None)?;
            total += r.reward;
            if r.terminal {
                break;
            }
        }
        returns.push(total);
    }
    let n = returns.len().max(1) as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let std = (returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n).sqrt();
    Ok(EvalStats { mean, std, returns })
}

/// Rebuilds the run's networks from a checkpoint and evaluates them.
pub fn evaluate(ckpt: &Checkpoint, cfg: &RunConfig, episodes: usize, seed: u64) -> Result<EvalStats> {
    cfg.validate()?;
    let mut models = Models::new(cfg, &cfg.world());
    models.load_checkpoint(ckpt)?;
    evaluate_models(&models, cfg, episodes, seed)
}

/// One agent at one step with the goal in force.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoalRow {
    pub episode: usize,
    pub step: usize,
    pub agent: usize,
    pub x: f64,
    pub y: f64,
    pub goal_x: f64,
    pub goal_y: f64,
    pub goal_value: f64,
}

/// Noise-free rollouts recording each agent's position and its slot of
/// the current goal.
pub fn inspect_goals(models: &Models, cfg: &RunConfig, episodes: usize, seed: u64) -> Result<Vec<GoalRow>> {
    let wc: WorldConfig = cfg.world();
    let layout = StateLayout::new(&wc);
    let mut world = World::new(wc.clone())?;
    let mut rng_env = stream_rng(seed, Stream::EvalEnv);
    let mut rng_img = stream_rng(seed, Stream::EvalImagine);
    let mut rows = Vec::new();
    for ep in 0..episodes {
        world.reset(rng_env.gen());
        let mut goal = models.choose_goal(cfg, world.state(), &mut rng_img)?;
        for t in 0.. {
            if t > 0 && t % cfg.goal_refresh == 0 {
                goal = models.choose_goal(cfg, world.state(), &mut rng_img)?;
            }
            for i in 0..wc.n_agents {
                let p = extract_agent_position(&layout, world.state(), i)?;
                let g = extract_agent_position(&layout, &goal.goal, i)?;
                rows.push(GoalRow {
                    episode: ep,
                    step: t,
                    agent: i,
                    x: p[0],
                    y: p[1],
                    goal_x: g[0],
                    goal_y: g[1],
                    goal_value: goal.value,
                });
            }
            let a = models.joint_action(&wc, world.state(), &goal.goal, 0.0, &mut rng_img)?;
            if world.step(&a, None)?.terminal {
                break;
            }
        }
    }
    Ok(rows)
}

pub fn write_goals_csv<W: std::io::Write>(w: W, rows: &[GoalRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}
