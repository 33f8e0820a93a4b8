//! `otcert` — certify optimal-transport Poincaré-Wirtinger inequalities on
//! convex domains from a JSON experiment config.
//!
//! Exit codes: 0 all checks hold, 1 usage/config error, 2 inequality violation.

mod config;
mod runner;

use clap::{Args, Parser, Subcommand};
use config::ExperimentConfig;
use runner::{version_info, Overrides, RunEnv};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "otcert", version, about = "Certified transport-based inequalities on convex domains", disable_version_flag = true)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Experiment config (JSON); see `otcert version --schema`.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Wasserstein backend: auto | exact | entropic | 1d.
    #[arg(long)]
    solver: Option<String>,
    /// Cells per axis (overrides the config).
    #[arg(long)]
    resolution: Option<u32>,
    /// Suppress progress output.
    #[arg(long)]
    quiet: bool,
    /// Record wall-clock times in the CSV (breaks byte-reproducibility).
    #[arg(long)]
    timings: bool,
    /// Also write per-report JSON detail records.
    #[arg(long)]
    details: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Certify every applicable inequality for one field on one domain.
    Certify(RunArgs),
    /// Run the checks over a (p, q) grid with explicit or seeded fields.
    Sweep(RunArgs),
    /// Neumann p-Laplacian eigenvalue with its two diameter lower bounds.
    Eigen(RunArgs),
    /// Displacement interpolation and the L^q geodesic convexity check (1D).
    Geodesic(RunArgs),
    /// Thin-box scaling study of the Poincaré ratio.
    Scaling(RunArgs),
    /// Print version, solver caps, and default tolerances.
    Version {
        /// List every default tolerance.
        #[arg(long)]
        tolerances: bool,
        /// Print the config file schema.
        #[arg(long)]
        schema: bool,
    },
}

fn overrides(args: &RunArgs) -> Overrides {
    Overrides {
        out: args.out.clone(),
        seed: args.seed,
        solver: args.solver.clone(),
        resolution: args.resolution,
        quiet: args.quiet,
        timings: args.timings,
        details: args.details,
    }
}

fn run(args: &RunArgs, go: impl Fn(&RunEnv) -> anyhow::Result<bool>) -> ExitCode {
    let cfg = match ExperimentConfig::load(&args.config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let env = match RunEnv::prepare(cfg, &overrides(args)) {
        Ok(env) => env,
        Err(e) => {
            eprintln!("config error: {e:#}");
            return ExitCode::from(1);
        }
    };
    match go(&env) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("inequality violation: some slack fell below its error bar");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are success; real usage errors exit 1.
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match &cli.cmd {
        Cmd::Certify(args) => run(args, runner::run_certify),
        Cmd::Sweep(args) => run(args, runner::run_sweep),
        Cmd::Eigen(args) => run(args, runner::run_eigen),
        Cmd::Geodesic(args) => run(args, runner::run_geodesic),
        Cmd::Scaling(args) => run(args, runner::run_scaling),
        Cmd::Version { tolerances, schema } => {
            print!("{}", version_info(*tolerances, *schema));
            ExitCode::SUCCESS
        }
    }
}
