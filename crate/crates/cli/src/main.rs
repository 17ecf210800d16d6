//! `macn-lab` command-line harness: train, eval, ablate, plot.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};
use diffcore::Checkpoint;
use macn_lab::agent::Variant;
use macn_lab::config::{parse_seeds, TrainConfig};
use macn_lab::gridsim::WorldId;
use macn_lab::metrics::Metrics;
use macn_lab::report;
use macn_lab::trainer::{evaluate_checkpoint, run_dir, train_run};

#[derive(Parser)]
#[command(
    name = "macn-lab",
    version,
    about = "Train and evaluate memory-augmented actor-critic navigation agents"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one variant on one world, once per seed.
    Train {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        variant: String,
    },
    /// Evaluate a checkpoint with greedy actions.
    Eval {
        #[arg(long)]
        world: WorldId,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Fails when the checkpoint holds a different variant.
        #[arg(long)]
        variant: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "1", value_parser = seeds_arg)]
        seeds: Seeds,
        /// Evaluation episodes; defaults to eval_episodes from the config.
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Train all four variants on one world and print the summary table.
    Ablate {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Write aggregated learning curves (CSV + SVG) for every world found.
    Plot {
        /// Directory searched recursively for metrics.csv files.
        #[arg(long)]
        metrics: PathBuf,
        /// Defaults to the metrics directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    world: WorldId,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated seeds; defaults to the config's seeds.
    #[arg(long, value_parser = seeds_arg)]
    seeds: Option<Seeds>,
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Overrides the configured episode count.
    #[arg(long)]
    episodes: Option<usize>,
}

/// Comma-separated seed list as one argument.
#[derive(Clone, Debug)]
struct Seeds(Vec<u64>);

fn seeds_arg(s: &str) -> Result<Seeds, String> {
    parse_seeds(s).map(Seeds)
}

/// Failure with its exit status: 2 for invalid input, 1 otherwise.
struct Failure(u8, String);

fn usage(msg: impl Into<String>) -> Failure {
    Failure(2, msg.into())
}

fn runtime(msg: impl ToString) -> Failure {
    Failure(1, msg.to_string())
}

fn load_config(path: Option<&Path>) -> Result<TrainConfig, Failure> {
    match path {
        Some(p) => TrainConfig::load(p).map_err(|e| usage(format!("config: {e}"))),
        None => Ok(TrainConfig::default()),
    }
}

fn parse_variant(s: &str) -> Result<Variant, Failure> {
    s.parse().map_err(usage)
}

fn resolve(run: &RunArgs) -> Result<(TrainConfig, Vec<u64>), Failure> {
    let mut cfg = load_config(run.config.as_deref())?;
    if let Some(n) = run.episodes {
        cfg.episodes = n;
    }
    let seeds = run.seeds.clone().map_or_else(|| cfg.seeds.clone(), |s| s.0);
    if seeds.is_empty() {
        return Err(usage("seed list is empty"));
    }
    Ok((cfg, seeds))
}

fn workers() -> usize {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    match std::env::var("MACN_LAB_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        Some(cap) if cap > 0 => cap.min(available),
        _ => available,
    }
}

/// Runs every job on a small worker pool; results come back in job order.
fn run_jobs(
    jobs: &[(Variant, u64)],
    world: WorldId,
    cfg: &TrainConfig,
    out: &Path,
) -> Vec<macn_lab::error::Result<Metrics>> {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<macn_lab::error::Result<Metrics>>>> =
        Mutex::new((0..jobs.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers().min(jobs.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(&(variant, seed)) = jobs.get(i) else {
                    break;
                };
                let r = train_run(variant, world, cfg, seed, Some(out));
                match &r {
                    Ok(m) => eprintln!(
                        "{world} {variant} seed {seed}: {} episodes, final-{} reward {:.2}, {:.0}s",
                        m.len(),
                        report::FINAL_WINDOW,
                        m.tail_mean_reward(report::FINAL_WINDOW),
                        m.wall_clock_secs
                    ),
                    Err(e) => eprintln!("{world} {variant} seed {seed}: {e}"),
                }
                results.lock().expect("results lock")[i] = Some(r);
            });
        }
    });
    results
        .into_inner()
        .expect("results lock")
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect()
}

fn train(run: &RunArgs, variant: &str) -> Result<(), Failure> {
    let variant = parse_variant(variant)?;
    let (cfg, seeds) = resolve(run)?;
    let jobs: Vec<(Variant, u64)> = seeds.iter().map(|&s| (variant, s)).collect();
    for (r, (_, seed)) in run_jobs(&jobs, run.world, &cfg, &run.out)
        .into_iter()
        .zip(&jobs)
    {
        r.map_err(runtime)?;
        println!(
            "{}",
            run_dir(&run.out, run.world, variant, *seed)
                .join("metrics.csv")
                .display()
        );
    }
    Ok(())
}

fn ablate(run: &RunArgs) -> Result<(), Failure> {
    let (cfg, seeds) = resolve(run)?;
    let jobs: Vec<(Variant, u64)> = Variant::ALL
        .iter()
        .flat_map(|&v| seeds.iter().map(move |&s| (v, s)))
        .collect();
    let mut runs = Vec::with_capacity(jobs.len());
    for (r, (variant, _)) in run_jobs(&jobs, run.world, &cfg, &run.out)
        .into_iter()
        .zip(&jobs)
    {
        runs.push((*variant, r.map_err(runtime)?));
    }
    let rows = report::summarize(&runs);
    let dir = run.out.join(run.world.name());
    let path = dir.join("summary.csv");
    std::fs::write(&path, report::summary_csv(&rows))
        .map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    print!("{}", report::summary_table(run.world, &rows));
    Ok(())
}

fn eval(
    world: WorldId,
    checkpoint: &Path,
    variant: Option<&str>,
    config: Option<&Path>,
    seeds: &[u64],
    episodes: Option<usize>,
) -> Result<(), Failure> {
    let expected = variant.map(parse_variant).transpose()?;
    let cfg = load_config(config)?;
    if seeds.is_empty() {
        return Err(usage("seed list is empty"));
    }
    let ckpt = Checkpoint::load(checkpoint)
        .map_err(|e| usage(format!("{}: {e}", checkpoint.display())))?;
    let episodes = episodes.unwrap_or(cfg.eval_episodes);
    for &seed in seeds {
        let r = evaluate_checkpoint(&ckpt, expected, world, episodes, seed, cfg.episode_cap)
            .map_err(|e| usage(e.to_string()))?;
        println!(
            "{world} seed {seed}: mean reward {:.2}, goal rate {:.3} over {episodes} episodes",
            r.mean_reward, r.goal_rate
        );
    }
    Ok(())
}

fn plot(metrics: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let out = out.unwrap_or(metrics);
    let files = report::plot_dir(metrics, out).map_err(|e| usage(e.to_string()))?;
    for f in files {
        println!("{}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train { run, variant } => train(run, variant),
        Command::Ablate { run } => ablate(run),
        Command::Eval {
            world,
            checkpoint,
            variant,
            config,
            seeds,
            episodes,
        } => eval(
            *world,
            checkpoint,
            variant.as_deref(),
            config.as_deref(),
            &seeds.0,
            *episodes,
        ),
        Command::Plot { metrics, out } => plot(metrics, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
