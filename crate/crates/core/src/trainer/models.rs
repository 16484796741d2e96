use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::envs::{observation_len, observe, StateLayout, WorldConfig};
use crate::error::{check_len, Error, Result};
use crate::imagination::{
    imagine_goal_deterministic, imagine_goal_uniform, CvaeModel, CvaeTrainer, GoalActor, GoalCritic,
    GoalSample, GoalStrategy,
};
use crate::nn::{AdamConfig, Checkpoint, ParamSet};
use crate::policy::{AgentLearner, CentralLearner};

use super::{Backbone, RunConfig};

/// Independent random streams derived from one run seed, so that adding or
/// removing a consumer (e.g. the goal modules) leaves the others untouched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    AgentInit = 0,
    GoalInit = 1,
    Env = 2,
    Explore = 3,
    Replay = 4,
    Imagine = 5,
    Cvae = 6,
    EvalEnv = 7,
    EvalImagine = 8,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// All networks of a run: agent learners (or the centralized learner) and
/// the goal modules.
#[derive(Debug, Clone)]
pub struct Models {
    pub backbone: Backbone,
    pub agents: Vec<AgentLearner>,
    pub central: Option<CentralLearner>,
    pub cvae: CvaeTrainer,
    pub goal_critic: GoalCritic,
    pub goal_actor: GoalActor,
}

impl Models {
    pub fn new(cfg: &RunConfig, world: &WorldConfig) -> Self {
        let layout = StateLayout::new(world);
        let s = layout.len();
        let o = observation_len(world);
        let n = world.n_agents;
        let mut rng = stream_rng(cfg.seed, Stream::AgentInit);
        let (agents, central) = match cfg.backbone {
            Backbone::DdpgCentralized => (
                Vec::new(),
                Some(CentralLearner::new(n * o, s, 2 * n, cfg.learner(), &mut rng)),
            ),
            _ => (
                (0..n)
                    .map(|_| AgentLearner::new(o, s, 2, cfg.learner(), &mut rng))
                    .collect(),
                None,
            ),
        };
        let mut rng = stream_rng(cfg.seed, Stream::GoalInit);
        let mut model = CvaeModel::new(s, cfg.latent_dim, cfg.horizon, &cfg.hidden, &mut rng);
        model.clamp = cfg.sigma_clamp();
        let goal_critic = GoalCritic::new(s, &cfg.hidden, &mut rng);
        let goal_actor = GoalActor::new(s, cfg.latent_dim, &cfg.hidden, cfg.sample_range, &mut rng);
        Self {
            backbone: cfg.backbone,
            agents,
            central,
            cvae: CvaeTrainer::new(model, AdamConfig::with_lr(cfg.cvae_lr)),
            goal_critic,
            goal_actor,
        }
    }

    pub fn state_dim(&self) -> usize {
        self.goal_critic.state_dim()
    }

    /// Number of critic networks reported in metrics.
    pub fn n_critics(&self) -> usize {
        if self.central.is_some() {
            1
        } else {
            self.agents.len()
        }
    }

    /// Named networks with their parameter counts.
    pub fn param_table(&self) -> Vec<(String, usize)> {
        self.to_checkpoint()
            .sections()
            .filter(|(name, _)| !name.contains("target_"))
            .map(|(name, p)| (name.to_string(), p.len()))
            .collect()
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::new();
        for (i, a) in self.agents.iter().enumerate() {
            a.save_into(&mut ck, &format!("agent{i}"));
        }
        if let Some(c) = &self.central {
            c.save_into(&mut ck, "central");
        }
        if self.backbone == Backbone::Magi {
            let m = &self.cvae.model;
            ck.insert("cvae/encoder", m.encoder.clone());
            ck.insert("cvae/prior", m.prior.clone());
            ck.insert("cvae/decoder", m.decoder.clone());
            ck.insert("goal_critic", self.goal_critic.net.clone());
            ck.insert("goal_actor", self.goal_actor.net.clone());
        }
        ck
    }

    /// Overwrites every network from `ckpt`; sections must exist and match
    /// this run's layouts.
    pub fn load_checkpoint(&mut self, ckpt: &Checkpoint) -> Result<()> {
        for (i, a) in self.agents.iter_mut().enumerate() {
            a.load_from(ckpt, &format!("agent{i}"))?;
        }
        if let Some(c) = &mut self.central {
            c.load_from(ckpt, "central")?;
        }
        if self.backbone == Backbone::Magi {
            let m = &mut self.cvae.model;
            copy(&mut m.encoder, ckpt, "cvae/encoder")?;
            copy(&mut m.prior, ckpt, "cvae/prior")?;
            copy(&mut m.decoder, ckpt, "cvae/decoder")?;
            copy(&mut self.goal_critic.net, ckpt, "goal_critic")?;
            copy(&mut self.goal_actor.net, ckpt, "goal_actor")?;
        }
        Ok(())
    }

    /// Goal for the next decision. Only the MAGI backbone imagines; every
    /// other case gets the constant zero goal.
    pub fn choose_goal<R: Rng + ?Sized>(
        &self,
        cfg: &RunConfig,
        state: &[f64],
        rng: &mut R,
    ) -> Result<GoalSample> {
        let strategy = match self.backbone {
            Backbone::Magi => cfg.goal_strategy,
            _ => GoalStrategy::Constant,
        };
        let model = &self.cvae.model;
        match strategy {
            GoalStrategy::Uniform => imagine_goal_uniform(
                model,
                &self.goal_critic,
                state,
                cfg.samples,
                cfg.sample_range,
                rng,
            ),
            GoalStrategy::Deterministic => {
                imagine_goal_deterministic(model, &self.goal_critic, &self.goal_actor, state)
            }
            GoalStrategy::Constant => GoalSample::constant(&self.goal_critic),
        }
    }

    /// Joint action for the current state. `noise_std = 0` skips the random
    /// stream entirely.
    pub fn joint_action<R: Rng + ?Sized>(
        &self,
        world: &WorldConfig,
        state: &[f64],
        goal: &[f64],
        noise_std: f64,
        rng: &mut R,
    ) -> Result<Vec<[f64; 2]>> {
        let n = world.n_agents;
        let mut draw = |k: usize| -> Vec<f64> {
            if noise_std > 0.0 {
                (0..k)
                    .map(|_| noise_std * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            } else {
                vec![0.0; k]
            }
        };
        if let Some(c) = &self.central {
            let mut joint = Vec::new();
            for i in 0..n {
                joint.extend(observe(world, state, i)?);
            }
            let a = c.act(&joint, &draw(2 * n))?;
            return Ok(a.chunks(2).map(|p| [p[0], p[1]]).collect());
        }
        check_len("agent learners", n, self.agents.len())?;
        let mut out = Vec::with_capacity(n);
        for (i, agent) in self.agents.iter().enumerate() {
            let obs = observe(world, state, i)?;
            let a = agent.act(&obs, goal, &draw(2))?;
            out.push([a[0], a[1]]);
        }
        Ok(out)
    }
}

fn copy(dst: &mut ParamSet, ckpt: &Checkpoint, name: &str) -> Result<()> {
    let src = ckpt.require(name)?;
    if !src.same_layout(dst) {
        return Err(Error::LayoutMismatch(format!(
            "checkpoint section `{name}` does not fit this task"
        )));
    }
    dst.values.clone_from(&src.values);
    Ok(())
}
