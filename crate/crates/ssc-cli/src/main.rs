//! `ssc`: sparse subspace clustering experiments from the command line.
//!
//! Exit codes: 0 on success, 2 for configuration/input errors (clap uses
//! the same code for usage errors), 3 for numerical or output failures.

use clap::{Args, Parser, Subcommand};
use ssc_cli::commands::{self, ClusterArgs};
use ssc_cli::config::{RawConfig, StopSpec};
use ssc_cli::CliError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "ssc",
    version,
    about = "Sparse subspace clustering: generation, clustering, sweeps, bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Sectioned key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base RNG seed; overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; 0 picks the machine default.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a synthetic union-of-subspaces dataset and write it as CSV.
    Generate {
        #[command(flatten)]
        common: Common,
    },
    /// Cluster a points CSV end to end and write coefficients, graph,
    /// labels, and metrics.
    Cluster {
        #[command(flatten)]
        common: Common,
        /// Points CSV (header x0..x{n-1}, one point per row).
        #[arg(long)]
        points: PathBuf,
        /// Optional ground-truth labels CSV (one 1-based id per line).
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Neighbors selected per iteration.
        #[arg(short, default_value_t = 3)]
        p: usize,
        /// Stopping rule: `ratio` or `fixed:<M>`.
        #[arg(long, default_value = "ratio")]
        stop: String,
        /// Number of clusters; defaults to the label count or an
        /// eigengap estimate.
        #[arg(long)]
        clusters: Option<usize>,
        /// Unit-normalize the loaded points.
        #[arg(long)]
        normalize: bool,
        /// k-means restarts.
        #[arg(long, default_value_t = 10)]
        restarts: usize,
    },
    /// Run the (rho, phi, sigma, p) grid from the config and aggregate
    /// metrics into CSV and SVG charts.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate the closed-form recovery bounds over the configured grid.
    Bounds {
        #[command(flatten)]
        common: Common,
    },
    /// Neighbor-quality demo: per-neighbor angle of deviation and
    /// true-neighbor rate curves for several batch sizes.
    AodDemo {
        #[command(flatten)]
        common: Common,
        /// Number of trials to average (overrides the config).
        #[arg(long)]
        trials: Option<usize>,
    },
}

fn load_config(common: &Common) -> Result<Option<RawConfig>, CliError> {
    match &common.config {
        Some(path) => Ok(Some(RawConfig::load(path)?)),
        None => Ok(None),
    }
}

fn require_config(common: &Common) -> Result<RawConfig, CliError> {
    load_config(common)?.ok_or_else(|| {
        CliError::Config("this command needs --config <path>".to_string())
    })
}

/// Run `f` on a pool of the requested size; 0 keeps the global default.
fn with_threads<T>(
    threads: usize,
    f: impl FnOnce() -> Result<T, CliError> + Send,
) -> Result<T, CliError>
where
    T: Send,
{
    if threads == 0 {
        return f();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot build thread pool: {e}")))?;
    pool.install(f)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate { common } => {
            let raw = require_config(&common)?;
            commands::cmd_generate(&raw, common.seed, &common.out)
        }
        Command::Cluster {
            common,
            points,
            labels,
            p,
            stop,
            clusters,
            normalize,
            restarts,
        } => {
            let stop: StopSpec = stop.parse().map_err(CliError::from)?;
            let args = ClusterArgs {
                points,
                labels,
                p,
                stop,
                clusters,
                normalize,
                restarts,
                seed: common.seed.unwrap_or(0),
                out: common.out.clone(),
            };
            with_threads(common.threads, move || commands::cmd_cluster(&args))
        }
        Command::Sweep { common } => {
            let raw = require_config(&common)?;
            let seed = common.seed;
            let out = common.out.clone();
            with_threads(common.threads, move || commands::cmd_sweep(&raw, seed, &out))
        }
        Command::Bounds { common } => {
            let raw = require_config(&common)?;
            commands::cmd_bounds(&raw, &common.out)
        }
        Command::AodDemo { common, trials } => {
            let raw = load_config(&common)?;
            let seed = common.seed;
            let out = common.out.clone();
            with_threads(common.threads, move || {
                commands::cmd_aod_demo(raw.as_ref(), seed, trials, &out)
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
