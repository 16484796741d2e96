use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "total_steps = 120\nwarmup = 40\neval_period = 60\neval_episodes = 2\nbatch_size = 8\nhidden = [8, 8]\nlatent_dim = 2\nsamples = 2\nreplay_capacity = 1000\n";

fn magi(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magi"))
        .args(args)
        .current_dir(dir)
        .env("MAGI_OUT", dir.join("runs"))
        .output()
        .expect("binary runs")
}

fn setup() -> tempfile::TempDir {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("nav.toml"), SMALL).unwrap();
    d
}

fn listing(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = walk(dir);
    v.sort();
    v
}

fn walk(dir: &Path) -> Vec<String> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p.display().to_string());
        }
    }
    out
}

#[test]
fn train_writes_run_directory_and_is_reproducible() {
    let d = setup();
    let o = magi(
        &["train", "--config", "nav.toml", "--seed", "7", "--out", "r1"],
        d.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r1 = d.path().join("r1");
    for f in [
        "config.toml",
        "metrics.csv",
        "timing.csv",
        "checkpoints/final.ckpt",
    ] {
        assert!(r1.join(f).exists(), "{f}");
    }
    let o = magi(
        &["train", "--config", "nav.toml", "--seed", "7", "--out", "r2"],
        d.path(),
    );
    assert!(o.status.success());
    let a = fs::read(r1.join("metrics.csv")).unwrap();
    let b = fs::read(d.path().join("r2/metrics.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 3);
    let ca = fs::read(r1.join("checkpoints/final.ckpt")).unwrap();
    assert_eq!(&ca[..9], b"MAGI-CKPT");
    assert_eq!(ca, fs::read(d.path().join("r2/checkpoints/final.ckpt")).unwrap());
    let cfg = fs::read_to_string(r1.join("config.toml")).unwrap();
    assert!(cfg.contains("seed = 7"));
}

#[test]
fn existing_run_needs_force() {
    let d = setup();
    assert!(magi(&["train", "--config", "nav.toml", "--out", "r"], d.path())
        .status
        .success());
    let o = magi(&["train", "--config", "nav.toml", "--out", "r"], d.path());
    assert_eq!(o.status.code(), Some(1));
    let o = magi(
        &["train", "--config", "nav.toml", "--out", "r", "--force"],
        d.path(),
    );
    assert!(o.status.success());
}

#[test]
fn default_out_uses_env_root() {
    let d = setup();
    let o = magi(&["train", "--config", "nav.toml", "--seed", "3"], d.path());
    assert!(o.status.success());
    assert!(d.path().join("runs/navigation-magi-seed3/metrics.csv").exists());
}

#[test]
fn usage_errors_exit_one_without_files() {
    let d = setup();
    let before = listing(d.path());
    let o = magi(&["train", "--config", "nav.toml", "--bogus"], d.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
    assert_eq!(magi(&["frobnicate"], d.path()).status.code(), Some(1));
    fs::write(d.path().join("typo.toml"), "smaples = 4\n").unwrap();
    let before_typo = listing(d.path());
    let o = magi(&["train", "--config", "typo.toml"], d.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("smaples"));
    assert_eq!(listing(d.path()), before_typo);
    assert_eq!(before.len() + 1, before_typo.len());
    assert_eq!(magi(&["--help"], d.path()).status.code(), Some(0));
}

#[test]
fn eval_and_inspect_goals_from_a_run() {
    let d = setup();
    assert!(magi(&["train", "--config", "nav.toml", "--out", "r"], d.path())
        .status
        .success());
    let ck = d.path().join("r/checkpoints/final.ckpt");
    let cfg_before = fs::read(d.path().join("nav.toml")).unwrap();
    let ck_before = fs::read(&ck).unwrap();

    let a = magi(
        &[
            "eval",
            "--config",
            "nav.toml",
            "--out",
            "r",
            "--episodes",
            "3",
            "--seed",
            "1",
        ],
        d.path(),
    );
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = magi(
        &[
            "eval",
            "--config",
            "nav.toml",
            "--checkpoint",
            "r/checkpoints/final.ckpt",
            "--episodes",
            "3",
            "--seed",
            "1",
        ],
        d.path(),
    );
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let mean: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("mean_return "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(mean <= 0.0);

    let o = magi(
        &[
            "inspect-goals",
            "--config",
            "nav.toml",
            "--out",
            "r",
            "--episodes",
            "1",
        ],
        d.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let goals = fs::read_to_string(d.path().join("r/goals.csv")).unwrap();
    assert_eq!(goals.lines().count(), 1 + 25 * 3);
    assert!(goals.starts_with("episode,step,agent,x,y,goal_x,goal_y,goal_value"));
    assert_eq!(
        magi(&["inspect-goals", "--config", "nav.toml", "--out", "r"], d.path())
            .status
            .code(),
        Some(1)
    );
    let o = magi(
        &[
            "inspect-goals",
            "--config",
            "nav.toml",
            "--out",
            "r",
            "--episodes",
            "1",
            "--force",
        ],
        d.path(),
    );
    assert!(o.status.success());
    assert_eq!(goals, fs::read_to_string(d.path().join("r/goals.csv")).unwrap());

    assert_eq!(fs::read(d.path().join("nav.toml")).unwrap(), cfg_before);
    assert_eq!(fs::read(&ck).unwrap(), ck_before);
}

#[test]
fn checkpoint_task_mismatch_exits_two() {
    let d = setup();
    assert!(magi(&["train", "--config", "nav.toml", "--out", "r"], d.path())
        .status
        .success());
    fs::write(d.path().join("tr.toml"), format!("{SMALL}task = \"treasure\"\n")).unwrap();
    let o = magi(
        &[
            "eval",
            "--config",
            "tr.toml",
            "--checkpoint",
            "r/checkpoints/final.ckpt",
        ],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    let o = magi(
        &[
            "inspect-goals",
            "--config",
            "tr.toml",
            "--checkpoint",
            "r/checkpoints/final.ckpt",
        ],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    let o = magi(
        &["eval", "--config", "nav.toml", "--checkpoint", "missing.ckpt"],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn ablate_writes_one_run_per_value() {
    let d = setup();
    let o = magi(
        &[
            "ablate",
            "--config",
            "nav.toml",
            "--axis",
            "sample_size",
            "--values",
            "1,4",
            "--out",
            "abl",
        ],
        d.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(d.path().join("abl/ablation.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    assert!(summary.lines().nth(1).unwrap().starts_with("sample_size,1,"));
    assert!(d.path().join("abl/sample_size=4/seed0/metrics.csv").exists());
    let o = magi(
        &[
            "ablate", "--config", "nav.toml", "--axis", "width", "--values", "1", "--out", "x",
        ],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    let o = magi(
        &[
            "ablate", "--config", "nav.toml", "--axis", "horizon", "--values", "30", "--out", "y",
        ],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(!d.path().join("y").exists());
}

#[test]
fn param_count_prints_table() {
    let d = setup();
    fs::write(d.path().join("full.toml"), "").unwrap();
    let o = magi(&["param-count", "--config", "full.toml"], d.path());
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let trunk = 14 * 64 + 64 + 64 * 64 + 64;
    assert!(
        text.lines()
            .any(|l| l.split_whitespace().collect::<Vec<_>>() == ["agent0/trunk", &trunk.to_string()]),
        "{text}"
    );
    assert!(text.lines().any(|l| l.starts_with("goal_critic")));
    let total: usize = text
        .lines()
        .last()
        .unwrap()
        .split_whitespace()
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    let sum: usize = text
        .lines()
        .filter(|l| !l.starts_with("total"))
        .map(|l| l.split_whitespace().nth(1).unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(total, sum);
}

fn metrics_file(dir: &Path, name: &str, rows: &[(u64, f64)]) {
    let mut s = String::from("step,eval_return,eval_return_std\n");
    for (x, y) in rows {
        s.push_str(&format!("{x},{y},0\n"));
    }
    fs::write(dir.join(name), s).unwrap();
}

fn polylines(svg: &str) -> Vec<Vec<(f64, f64)>> {
    svg.match_indices("<polyline")
        .map(|(i, _)| {
            let rest = &svg[i..];
            let p = rest.find("points=\"").unwrap() + 8;
            let end = rest[p..].find('"').unwrap();
            rest[p..p + end]
                .split_whitespace()
                .map(|xy| {
                    let (x, y) = xy.split_once(',').unwrap();
                    (x.parse().unwrap(), y.parse().unwrap())
                })
                .collect()
        })
        .collect()
}

#[test]
fn plot_emits_one_polyline_per_file() {
    let d = setup();
    metrics_file(
        d.path(),
        "magi.csv",
        &[(0, -30.0), (10, -20.0), (20, -15.0), (30, -12.0)],
    );
    metrics_file(d.path(), "ddpg.csv", &[(0, -30.0), (10, -25.0), (20, -22.0)]);
    let o = magi(
        &[
            "plot",
            "magi.csv",
            "ddpg.csv",
            "--out",
            "plots",
            "--metric",
            "eval_return",
        ],
        d.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let svg = fs::read_to_string(d.path().join("plots/eval_return.svg")).unwrap();
    let lines = polylines(&svg);
    assert_eq!(lines.len(), 2);
    assert!(svg.contains(">magi<") && svg.contains(">ddpg<"));
    // Increasing values map to decreasing SVG y (the axis points down).
    for w in lines[0].windows(2) {
        assert!(w[1].1 < w[0].1);
        assert!(w[1].0 > w[0].0);
    }
    let o = magi(&["plot", "magi.csv", "--out", "all"], d.path());
    assert!(o.status.success());
    assert!(d.path().join("all/eval_return_std.svg").exists());
}

#[test]
fn plot_rejects_bad_csvs() {
    let d = setup();
    fs::write(d.path().join("empty.csv"), "step,eval_return\n").unwrap();
    let o = magi(&["plot", "empty.csv", "--out", "p"], d.path());
    assert_eq!(o.status.code(), Some(2));
    fs::write(d.path().join("bad.csv"), "step,eval_return\n1,2\n2,oops\n").unwrap();
    let o = magi(&["plot", "bad.csv", "--out", "p"], d.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.csv") && err.contains("line 3"), "{err}");
}
