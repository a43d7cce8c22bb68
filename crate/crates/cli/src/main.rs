use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use lzqcl::io::{Job, RunManifest};
use lzqcl::probes::{Experiment, GLOBAL_MAXIMUM_THRESHOLD};
use lzqcl::{OptimizerConfig, SystemParams};

mod config;
mod run;

use config::{at_least, default_out_dir, non_empty, pick, positive, FileConfig};

/// Control-landscape experiments on the driven Landau-Zener system.
#[derive(Parser)]
#[command(name = "lzqcl", version)]
struct Cli {
    /// TOML file whose keys are long flag names; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads [default: available parallelism].
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Two-slot landscape J(a1, a2) on a square grid.
    Scan(ScanArgs),
    /// Optimize a single seed and store the whole trajectory.
    Optimize(OptimizeArgs),
    /// Statistics over many seeds for a grid of (T/T_min, N_ts) cells.
    Sweep(SweepArgs),
    /// Rerun a saved manifest.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct SystemArgs {
    /// Energy gap Δ [default: 1.0].
    #[arg(long)]
    gap: Option<f64>,
}

#[derive(Args)]
struct ScanArgs {
    /// Duration in units of T_min.
    #[arg(long)]
    t_ratio: Option<f64>,
    /// Grid covers [-w, w]² [default: 2.0].
    #[arg(long)]
    half_width: Option<f64>,
    /// Points per axis [default: 401].
    #[arg(long)]
    resolution: Option<usize>,
    #[command(flatten)]
    system: SystemArgs,
    /// Grid CSV [default: $LZQCL_OUT_DIR/scan.csv].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OptimizerArgs {
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    grad_tolerance: Option<f64>,
    #[arg(long)]
    success_delta: Option<f64>,
    #[arg(long)]
    initial_step: Option<f64>,
    #[arg(long)]
    backtrack_factor: Option<f64>,
    #[arg(long)]
    min_step: Option<f64>,
    #[arg(long)]
    armijo_c: Option<f64>,
}

#[derive(Args)]
struct OptimizeArgs {
    /// Duration in units of T_min.
    #[arg(long)]
    t_ratio: Option<f64>,
    /// Number of time slots.
    #[arg(long)]
    nts: Option<usize>,
    /// Seed amplitudes drawn from [-A, A] [default: 1.0].
    #[arg(long)]
    amplitude: Option<f64>,
    /// Random seed of the initial field [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Start from the zero field instead of a random seed.
    #[arg(long)]
    zero_seed: bool,
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    optimizer: OptimizerArgs,
    /// Trajectory file [default: $LZQCL_OUT_DIR/trajectory.csv].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// distance, traps or rmetric.
    #[arg(long)]
    experiment: Option<Experiment>,
    /// Comma-separated durations in units of T_min.
    #[arg(long, value_delimiter = ',')]
    t_ratios: Option<Vec<f64>>,
    /// Comma-separated slot counts [default: 100].
    #[arg(long, value_delimiter = ',')]
    nts_list: Option<Vec<usize>>,
    /// Seed box half-width [default: 50 for traps, else 1].
    #[arg(long)]
    amplitude: Option<f64>,
    /// Seeds per cell [default: 1000].
    #[arg(long)]
    n_seeds: Option<usize>,
    #[arg(long)]
    master_seed: Option<u64>,
    /// Trap threshold on the final fidelity [default: 0.99].
    #[arg(long)]
    threshold: Option<f64>,
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    optimizer: OptimizerArgs,
    /// [default: $LZQCL_OUT_DIR or the working directory]
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    /// A manifest.toml, or a trajectory file with an embedded manifest.
    manifest: PathBuf,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn system(args: &SystemArgs, file: &FileConfig) -> Result<SystemParams> {
    let gap = positive("gap", pick(args.gap, file.gap, 1.0))?;
    Ok(SystemParams::new(gap)?)
}

fn optimizer(args: &OptimizerArgs, file: &FileConfig) -> Result<OptimizerConfig> {
    let d = OptimizerConfig::default();
    let config = OptimizerConfig {
        max_iterations: at_least(
            "max-iterations",
            pick(args.max_iterations, file.max_iterations, d.max_iterations),
            1,
        )?,
        grad_tolerance: positive(
            "grad-tolerance",
            pick(args.grad_tolerance, file.grad_tolerance, d.grad_tolerance),
        )?,
        success_delta: positive(
            "success-delta",
            pick(args.success_delta, file.success_delta, d.success_delta),
        )?,
        initial_step: positive(
            "initial-step",
            pick(args.initial_step, file.initial_step, d.initial_step),
        )?,
        backtrack_factor: pick(args.backtrack_factor, file.backtrack_factor, d.backtrack_factor),
        min_step: positive("min-step", pick(args.min_step, file.min_step, d.min_step))?,
        armijo_c: pick(args.armijo_c, file.armijo_c, d.armijo_c),
    };
    match config.validate() {
        Err(lzqcl::Error::InvalidParameter { name, reason }) => {
            anyhow::bail!("invalid value for '--{}': {reason}", name.replace('_', "-"))
        }
        other => other?,
    }
    Ok(config)
}

fn required<T>(flag: &str, value: Option<T>) -> Result<T> {
    value.with_context(|| format!("missing required '--{flag}' (flag or config key)"))
}

fn manifest(master_seed: u64, params: SystemParams, optimizer: OptimizerConfig, job: Job) -> RunManifest {
    RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: Some(chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)),
        master_seed,
        params,
        optimizer,
        job,
    }
}

fn cmd_scan(args: ScanArgs, file: &FileConfig) -> Result<String> {
    let t_ratio = positive("t-ratio", required("t-ratio", args.t_ratio.or(file.t_ratio))?)?;
    let half_width = positive("half-width", pick(args.half_width, file.half_width, 2.0))?;
    let resolution = at_least("resolution", pick(args.resolution, file.resolution, 401), 2)?;
    let params = system(&args.system, file)?;
    let out = pick(args.out, file.out.clone(), default_out_dir().join("scan.csv"));
    let m = manifest(
        0,
        params,
        OptimizerConfig::default(),
        Job::Scan {
            t_ratio,
            half_width,
            resolution,
        },
    );
    run::echo_manifest(&m);
    run::scan(&m, &out)
}

fn cmd_optimize(args: OptimizeArgs, file: &FileConfig) -> Result<String> {
    let t_ratio = positive("t-ratio", required("t-ratio", args.t_ratio.or(file.t_ratio))?)?;
    let n_ts = at_least("nts", required("nts", args.nts.or(file.nts))?, 1)?;
    let amplitude = positive("amplitude", pick(args.amplitude, file.amplitude, 1.0))?;
    let seed = pick(args.seed, file.seed, 0);
    let zero_seed = args.zero_seed || file.zero_seed.unwrap_or(false);
    let params = system(&args.system, file)?;
    let config = optimizer(&args.optimizer, file)?;
    let out = pick(args.out, file.out.clone(), default_out_dir().join("trajectory.csv"));
    let m = manifest(
        seed,
        params,
        config,
        Job::Optimize {
            t_ratio,
            n_ts,
            amplitude,
            seed_index: 0,
            zero_seed,
        },
    );
    run::echo_manifest(&m);
    run::optimize_run(&m, &out)
}

fn cmd_sweep(args: SweepArgs, file: &FileConfig) -> Result<String> {
    let experiment = required("experiment", args.experiment.or(file.experiment))?;
    let t_ratios = non_empty(
        "t-ratios",
        required("t-ratios", args.t_ratios.or(file.t_ratios.clone()))?,
    )?;
    for &t in &t_ratios {
        positive("t-ratios", t)?;
    }
    let nts_list = non_empty("nts-list", pick(args.nts_list, file.nts_list.clone(), vec![100]))?;
    for &n in &nts_list {
        at_least("nts-list", n, 1)?;
    }
    let amplitude = positive(
        "amplitude",
        pick(args.amplitude, file.amplitude, experiment.default_amplitude()),
    )?;
    let n_seeds = at_least("n-seeds", pick(args.n_seeds, file.n_seeds, 1000), 1)?;
    if experiment == Experiment::MeanDistance {
        at_least("n-seeds", n_seeds, 2)?;
    }
    let threshold = pick(args.threshold, file.threshold, GLOBAL_MAXIMUM_THRESHOLD);
    if !(0.0..=1.0).contains(&threshold) {
        anyhow::bail!("invalid value '{threshold}' for '--threshold': must lie in [0, 1]");
    }
    let master_seed = pick(args.master_seed, file.master_seed, 0);
    let params = system(&args.system, file)?;
    let config = optimizer(&args.optimizer, file)?;
    let out_dir = pick(args.out_dir, file.out_dir.clone(), default_out_dir());
    let m = manifest(
        master_seed,
        params,
        config,
        Job::Sweep {
            experiment,
            t_ratios,
            nts_list,
            amplitude,
            n_seeds,
            threshold,
        },
    );
    run::echo_manifest(&m);
    run::sweep(&m, &out_dir)
}

fn cmd_replay(args: ReplayArgs, file: &FileConfig) -> Result<String> {
    let m = run::load_manifest(&args.manifest)?;
    let out_dir = pick(args.out_dir, file.out_dir.clone(), default_out_dir());
    run::echo_manifest(&m);
    run::replay(&m, &out_dir)
}

fn main_inner(cli: Cli) -> Result<String> {
    let file = FileConfig::load(cli.config.as_deref())?;
    if let Some(jobs) = cli.jobs.or(file.jobs) {
        at_least("jobs", jobs, 1)?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("configuring the worker pool")?;
    }
    match cli.command {
        Command::Scan(a) => cmd_scan(a, &file),
        Command::Optimize(a) => cmd_optimize(a, &file),
        Command::Sweep(a) => cmd_sweep(a, &file),
        Command::Replay(a) => cmd_replay(a, &file),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
