use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use magi_core::nn::Checkpoint;
use magi_core::trainer::{
    evaluate, inspect_goals, run_ablation, train_with, write_ablation_csv, write_goals_csv,
    write_metrics_csv, write_timing_csv, AblationAxis, Models, RunConfig,
};

mod plot;

/// Multi-agent goal imagination from the command line.
#[derive(Parser, Debug)]
#[command(name = "magi", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train one run and write metrics and a checkpoint.
    Train(TrainArgs),
    /// Evaluate a checkpoint with noise-free episodes.
    Eval(EvalArgs),
    /// Train one run per axis value and seed.
    Ablate(AblateArgs),
    /// Export agent positions and imagined goals as CSV.
    InspectGoals(InspectArgs),
    /// Render metrics CSVs as SVG line charts.
    Plot(PlotArgs),
    /// Print the parameter count of every network.
    ParamCount(ConfigArg),
}

#[derive(Args, Debug)]
struct ConfigArg {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args, Debug)]
struct RunDir {
    /// Run directory; defaults to a name derived from the config under $MAGI_OUT.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Root for derived run directories.
    #[arg(long, env = "MAGI_OUT", default_value = "runs", hide = true)]
    out_root: PathBuf,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[command(flatten)]
    dir: RunDir,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Replace an existing run directory.
    #[arg(long)]
    force: bool,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[command(flatten)]
    dir: RunDir,
    /// Checkpoint file; defaults to <out>/checkpoints/final.ckpt.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of evaluation episodes; defaults to the config value.
    #[arg(long)]
    episodes: Option<usize>,
}

#[derive(Args, Debug)]
struct AblateArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[command(flatten)]
    dir: RunDir,
    /// sample_size or horizon.
    #[arg(long)]
    axis: String,
    /// Comma-separated axis values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<usize>,
    /// Run a single seed instead of the config's seed list.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    force: bool,
}

#[derive(Args, Debug)]
struct InspectArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[command(flatten)]
    dir: RunDir,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    episodes: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Replace an existing goals.csv.
    #[arg(long)]
    force: bool,
}

#[derive(Args, Debug)]
struct PlotArgs {
    /// Metrics CSV files, one series each.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Directory for the SVG files.
    #[arg(long)]
    out: PathBuf,
    /// Plot only this column.
    #[arg(long)]
    metric: Option<String>,
}

/// Errors that map to exit code 1.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Ablate(a) => cmd_ablate(a),
        Command::InspectGoals(a) => cmd_inspect(a),
        Command::Plot(a) => plot::run(&a.inputs, &a.out, a.metric.as_deref()),
        Command::ParamCount(a) => cmd_param_count(a),
    }
}

fn load_config(arg: &ConfigArg, seed: Option<u64>) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(&arg.config).map_err(|e| usage(e.to_string()))?;
    if let Some(s) = seed {
        cfg.seed = s;
        cfg.seeds.clear();
    }
    Ok(cfg)
}

fn run_dir(dir: &RunDir, cfg: &RunConfig, tag: &str) -> PathBuf {
    dir.out.clone().unwrap_or_else(|| {
        dir.out_root.join(format!(
            "{}-{}-{tag}seed{}",
            cfg.task,
            cfg.backbone.name(),
            cfg.seed
        ))
    })
}

fn prepare_dir(path: &Path, force: bool) -> Result<()> {
    let occupied = path.exists()
        && fs::read_dir(path)
            .with_context(|| format!("reading {}", path.display()))?
            .next()
            .is_some();
    if occupied {
        if !force {
            return Err(usage(format!(
                "{} already exists; pass --force to overwrite",
                path.display()
            )));
        }
        fs::remove_dir_all(path).with_context(|| format!("clearing {}", path.display()))?;
    }
    fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(())
}

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).with_context(|| format!("creating {}", path.display()))
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let cfg = load_config(&a.config, a.seed)?;
    let dir = run_dir(&a.dir, &cfg, "");
    prepare_dir(&dir, a.force)?;
    fs::create_dir_all(dir.join("checkpoints"))?;
    fs::write(dir.join("config.toml"), cfg.to_toml_string())?;
    let out = train_with(&cfg, |row, time| {
        eprintln!(
            "step {:>8}  eval {:>10.4}  train {:>10.4}  ({:.1}s)",
            row.step, row.eval_return, row.train_return, time.wall_seconds
        );
    })?;
    write_metrics_csv(create(&dir.join("metrics.csv"))?, out.n_critics, &out.metrics)?;
    write_timing_csv(create(&dir.join("timing.csv"))?, &out.timing)?;
    out.checkpoint.save(dir.join("checkpoints").join("final.ckpt"))?;
    println!("{}", dir.display());
    Ok(())
}

fn checkpoint_path(dir: &RunDir, explicit: &Option<PathBuf>, cfg: &RunConfig) -> PathBuf {
    explicit
        .clone()
        .unwrap_or_else(|| run_dir(dir, cfg, "").join("checkpoints").join("final.ckpt"))
}

fn load_models(cfg: &RunConfig, path: &Path) -> Result<Models> {
    let ck = Checkpoint::load(path).with_context(|| format!("loading {}", path.display()))?;
    let mut models = Models::new(cfg, &cfg.world());
    models
        .load_checkpoint(&ck)
        .with_context(|| format!("checkpoint {} does not match the config", path.display()))?;
    Ok(models)
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let cfg = load_config(&a.config, None)?;
    let path = checkpoint_path(&a.dir, &a.checkpoint, &cfg);
    let ck = Checkpoint::load(&path).with_context(|| format!("loading {}", path.display()))?;
    let episodes = a.episodes.unwrap_or(cfg.eval_episodes);
    let stats = evaluate(&ck, &cfg, episodes, a.seed.unwrap_or(cfg.seed))
        .with_context(|| format!("evaluating {}", path.display()))?;
    println!("episodes {episodes}");
    println!("mean_return {}", stats.mean);
    println!("std_return {}", stats.std);
    Ok(())
}

fn cmd_ablate(a: AblateArgs) -> Result<()> {
    let cfg = load_config(&a.config, a.seed)?;
    let axis: AblationAxis = a
        .axis
        .parse()
        .map_err(|e: magi_core::Error| usage(e.to_string()))?;
    let dir = run_dir(&a.dir, &cfg, &format!("{}-", axis.name()));
    for &v in &a.values {
        let mut probe = cfg.clone();
        axis.apply(&mut probe, v);
        probe
            .validate()
            .map_err(|e| usage(format!("{}={v}: {e}", axis.name())))?;
    }
    prepare_dir(&dir, a.force)?;
    fs::write(dir.join("config.toml"), cfg.to_toml_string())?;
    let runs = run_ablation(&cfg, axis, &a.values)?;
    for r in &runs {
        let sub = dir
            .join(format!("{}={}", axis.name(), r.value))
            .join(format!("seed{}", r.seed));
        fs::create_dir_all(&sub)?;
        write_metrics_csv(create(&sub.join("metrics.csv"))?, r.n_critics, &r.metrics)?;
    }
    write_ablation_csv(create(&dir.join("ablation.csv"))?, axis, &runs)?;
    for &v in &a.values {
        let xs: Vec<f64> = runs
            .iter()
            .filter(|r| r.value == v)
            .map(|r| r.final_return)
            .collect();
        println!(
            "{}={v} mean_return {}",
            axis.name(),
            xs.iter().sum::<f64>() / xs.len() as f64
        );
    }
    println!("{}", dir.display());
    Ok(())
}

fn cmd_inspect(a: InspectArgs) -> Result<()> {
    let cfg = load_config(&a.config, None)?;
    let path = checkpoint_path(&a.dir, &a.checkpoint, &cfg);
    let models = load_models(&cfg, &path)?;
    let dir = run_dir(&a.dir, &cfg, "");
    let target = dir.join("goals.csv");
    if target.exists() && !a.force {
        return Err(usage(format!(
            "{} already exists; pass --force to overwrite",
            target.display()
        )));
    }
    let rows = inspect_goals(&models, &cfg, a.episodes, a.seed.unwrap_or(cfg.seed))?;
    fs::create_dir_all(&dir)?;
    write_goals_csv(create(&target)?, &rows)?;
    println!("{}", target.display());
    Ok(())
}

fn cmd_param_count(a: ConfigArg) -> Result<()> {
    let cfg = load_config(&a, None)?;
    let models = Models::new(&cfg, &cfg.world());
    let table = models.param_table();
    let width = table.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max(5);
    let mut total = 0;
    for (name, n) in &table {
        println!("{name:<width$}  {n:>10}");
        total += n;
    }
    println!("{:<width$}  {total:>10}", "total");
    Ok(())
}
