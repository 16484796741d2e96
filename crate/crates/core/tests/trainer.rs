use magi_core::envs::{StateLayout, Task, WorldConfig};
use magi_core::imagination::GoalStrategy;
use magi_core::nn::Checkpoint;
use magi_core::trainer::{
    evaluate, inspect_goals, run_ablation, train, write_metrics_csv, AblationAxis, Backbone, Models,
    RunConfig, Trainer,
};

fn small(task: Task) -> RunConfig {
    RunConfig {
        task,
        total_steps: 400,
        eval_period: 100,
        eval_episodes: 2,
        warmup: 60,
        batch_size: 16,
        replay_capacity: 10_000,
        cvae_period: 5,
        hidden: vec![16, 16],
        latent_dim: 3,
        samples: 4,
        seed: 11,
        ..RunConfig::default()
    }
}

fn csv_bytes(out: &magi_core::trainer::TrainOutput) -> Vec<u8> {
    let mut buf = Vec::new();
    write_metrics_csv(&mut buf, out.n_critics, &out.metrics).unwrap();
    buf
}

fn ckpt_bytes(c: &Checkpoint) -> Vec<u8> {
    let mut buf = Vec::new();
    c.write_to(&mut buf).unwrap();
    buf
}

#[test]
fn zero_steps_gives_empty_metrics_and_initial_checkpoint() {
    let cfg = RunConfig {
        total_steps: 0,
        ..small(Task::Navigation)
    };
    let out = train(&cfg).unwrap();
    assert!(out.metrics.is_empty());
    let fresh = Models::new(&cfg, &cfg.world()).to_checkpoint();
    assert_eq!(ckpt_bytes(&out.checkpoint), ckpt_bytes(&fresh));
}

#[test]
fn identical_runs_give_identical_metrics() {
    for backbone in [
        Backbone::Magi,
        Backbone::DdpgIndependent,
        Backbone::DdpgCentralized,
    ] {
        let cfg = RunConfig {
            backbone,
            ..small(Task::Navigation)
        };
        let a = train(&cfg).unwrap();
        let b = train(&cfg).unwrap();
        assert_eq!(a.metrics.len(), 4);
        assert_eq!(csv_bytes(&a), csv_bytes(&b), "{backbone:?}");
        assert_eq!(ckpt_bytes(&a.checkpoint), ckpt_bytes(&b.checkpoint));
    }
}

#[test]
fn deterministic_strategy_and_latent_reward_run() {
    let cfg = RunConfig {
        goal_strategy: GoalStrategy::Deterministic,
        intrinsic: magi_core::policy::IntrinsicVariant::LatentKl,
        ..small(Task::Navigation)
    };
    let out = train(&cfg).unwrap();
    assert!(out.metrics.iter().all(|r| r.eval_return.is_finite()));
    assert!(out.metrics.last().unwrap().cvae_loss.is_finite());
}

#[test]
fn every_task_trains() {
    for task in [Task::Treasure, Task::PredatorPrey, Task::KeepAway] {
        let cfg = RunConfig {
            total_steps: 150,
            eval_period: 150,
            eval_episodes: 1,
            ..small(task)
        };
        let out = train(&cfg).unwrap();
        assert_eq!(out.metrics.len(), 1, "{task}");
    }
}

#[test]
fn horizon_pairs_never_cross_episodes() {
    let out = train(&small(Task::Navigation)).unwrap();
    assert!(out.audit.checked > 0);
    assert_eq!(out.audit.violations, 0);
}

#[test]
fn checkpoint_round_trip_preserves_evaluation() {
    let cfg = small(Task::Navigation);
    let out = train(&cfg).unwrap();
    let before = evaluate(&out.checkpoint, &cfg, 3, 99).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("final.ckpt");
    out.checkpoint.save(&path).unwrap();
    let loaded = Checkpoint::load(&path).unwrap();
    let after = evaluate(&loaded, &cfg, 3, 99).unwrap();
    assert_eq!(before, after);
    assert!(before.returns.iter().all(|r| *r <= 0.0));
}

#[test]
fn evaluation_ignores_intrinsic_weight() {
    let cfg = small(Task::Navigation);
    let out = train(&cfg).unwrap();
    let a = evaluate(&out.checkpoint, &cfg, 3, 5).unwrap();
    for lambda in [0.0, 0.5, 10.0] {
        let other = RunConfig {
            lambda,
            ..cfg.clone()
        };
        assert_eq!(a, evaluate(&out.checkpoint, &other, 3, 5).unwrap());
    }
}

#[test]
fn checkpoint_for_another_task_is_rejected() {
    let cfg = RunConfig {
        total_steps: 0,
        ..small(Task::Treasure)
    };
    let out = train(&cfg).unwrap();
    let nav = small(Task::Navigation);
    assert!(evaluate(&out.checkpoint, &nav, 1, 0).is_err());
}

#[test]
fn goal_is_constant_between_refresh_points() {
    let cfg = RunConfig {
        goal_refresh: 4,
        warmup: 10,
        ..small(Task::Navigation)
    };
    let mut t = Trainer::new(cfg).unwrap();
    let mut history = Vec::new();
    for _ in 0..100 {
        t.step().unwrap();
        let last = t.replay().get(t.replay().len() as u64 - 1).unwrap().clone();
        history.push(last);
    }
    for w in history.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.episode == b.episode && b.step % 4 != 0 {
            assert_eq!(
                a.goal, b.goal,
                "goal changed inside a refresh window at step {}",
                b.step
            );
        }
    }
    assert!(history.windows(2).any(|w| w[0].goal != w[1].goal));
}

#[test]
fn inspect_goals_rows_and_refresh_windows() {
    let cfg = RunConfig {
        goal_refresh: 5,
        ..small(Task::Navigation)
    };
    let models = Models::new(&cfg, &cfg.world());
    let rows = inspect_goals(&models, &cfg, 1, 3).unwrap();
    assert_eq!(rows.len(), 25 * 3);
    for w in rows.windows(4) {
        let (a, b) = (&w[0], &w[3]);
        if b.step % 5 != 0 {
            assert_eq!(
                (a.goal_x, a.goal_y, a.goal_value),
                (b.goal_x, b.goal_y, b.goal_value)
            );
        }
    }
    assert_eq!(rows, inspect_goals(&models, &cfg, 1, 3).unwrap());
}

#[test]
fn magi_with_constant_goal_and_zero_lambda_matches_independent_ddpg() {
    let base = RunConfig {
        total_steps: 1200,
        eval_period: 400,
        warmup: 100,
        ..small(Task::Navigation)
    };
    let magi = RunConfig {
        backbone: Backbone::Magi,
        lambda: 0.0,
        goal_strategy: GoalStrategy::Constant,
        ..base.clone()
    };
    let ddpg = RunConfig {
        backbone: Backbone::DdpgIndependent,
        ..base
    };
    let mut a = Trainer::new(magi).unwrap();
    let mut b = Trainer::new(ddpg).unwrap();
    let n = StateLayout::new(&WorldConfig::for_task(Task::Navigation)).n_agents;
    for step in 1..=1200u64 {
        a.step().unwrap();
        b.step().unwrap();
        if step % 200 == 0 {
            for i in 0..n {
                assert_eq!(
                    a.models().agents[i],
                    b.models().agents[i],
                    "agent {i} diverged by step {step}"
                );
            }
        }
    }
}

#[test]
fn single_value_ablation_equals_plain_training() {
    let cfg = RunConfig {
        total_steps: 200,
        ..small(Task::Navigation)
    };
    let runs = run_ablation(&cfg, AblationAxis::SampleSize, &[cfg.samples]).unwrap();
    assert_eq!(runs.len(), 1);
    let plain = train(&cfg).unwrap();
    assert_eq!(runs[0].metrics, plain.metrics);
}

#[test]
fn ablation_runs_every_value_and_seed() {
    let cfg = RunConfig {
        total_steps: 100,
        seeds: vec![1, 2],
        ..small(Task::Navigation)
    };
    let runs = run_ablation(&cfg, AblationAxis::Horizon, &[2, 4, 8, 16]).unwrap();
    assert_eq!(runs.len(), 8);
    assert_eq!(
        runs.iter().map(|r| r.config.horizon).collect::<Vec<_>>(),
        vec![2, 2, 4, 4, 8, 8, 16, 16]
    );
    assert!(run_ablation(&cfg, AblationAxis::Horizon, &[]).is_err());
}

mod replay_properties {
    use magi_core::trainer::{ReplayBuffer, Transition};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tr(episode: u64, step: usize, len: usize) -> Transition {
        Transition {
            state: vec![episode as f64, step as f64],
            actions: vec![0.0; 2],
            reward: 0.0,
            intrinsic: vec![0.0],
            next_state: vec![episode as f64, (step + 1) as f64],
            done: step + 1 == len,
            goal: vec![0.0; 2],
            episode,
            step,
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn pairs_stay_inside_episodes(
            lengths in prop::collection::vec(1usize..30, 1..20),
            capacity in 1usize..200,
            horizon in 1usize..8,
            seed in 0u64..1000,
        ) {
            let mut buf = ReplayBuffer::new(capacity, horizon).unwrap();
            for (e, &len) in lengths.iter().enumerate() {
                for step in 0..len {
                    buf.push(tr(e as u64, step, len));
                    prop_assert!(buf.len() <= capacity);
                }
            }
            let pushed: u64 = lengths.iter().map(|&l| l as u64).sum();
            let oldest = pushed - buf.len() as u64;
            let c = horizon as u64;
            let brute = (oldest..pushed)
                .filter(|&k| match (buf.get(k), buf.get(k + c)) {
                    (Some(a), Some(b)) => a.episode == b.episode && b.step == a.step + horizon,
                    _ => false,
                })
                .count();
            prop_assert_eq!(buf.valid_pair_count(), brute);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            match buf.sample_horizon_pairs(32, &mut rng) {
                None => prop_assert_eq!(brute, 0),
                Some(batch) => {
                    for r in 0..batch.states.nrows() {
                        let (s, f) = (batch.states.row(r), batch.futures.row(r));
                        prop_assert_eq!(s[0], f[0]);
                        prop_assert_eq!(f[1] - s[1], horizon as f64);
                    }
                }
            }
        }
    }
}
