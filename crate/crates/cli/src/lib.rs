//! Command-line front end for `gmk-core`: CSV/JSON ingestion, and the `fit`,
//! `forecast`, `simulate`, `bridge`, `diagnose` and `kernel-eval` commands.

pub mod input;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gmk_core::{
    empirical_increment_autocorr, euler_maruyama, fit, forecast_path, increment_autocorr, kernel_eval,
    max_horizon, sample_bridge, sample_paths, TimeGrid,
};
use thiserror::Error;

pub use input::parse_csv;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] gmk_core::Error),
    #[error("format error: {0}")]
    Format(String),
    #[error("ordering error: row {row} has time {t}, not after {previous}")]
    Ordering { row: usize, t: f64, previous: f64 },
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    /// 2 for domain, estimation and input errors; 3 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "gmk", version, about = "Gaussian Markov kernels with stationary increments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// RNG seed for simulation commands.
    #[arg(long, global = true, env = "GMK_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form maximum-likelihood fit of a `time,x1..xm` CSV; emits JSON.
    Fit(InputArgs),
    /// Posterior mean and bands at query times after the last sample; emits CSV.
    Forecast(ForecastArgs),
    /// Sample paths from a kernel (exact) or a semi-parametric SDE (euler).
    Simulate(SimulateArgs),
    /// Sample a matrix-scaled Brownian bridge.
    Bridge(BridgeArgs),
    /// Increment autocorrelation of a scalar kernel; emits JSON.
    Diagnose(DiagnoseArgs),
    /// Evaluate the kernel at one (t, s) pair; emits JSON.
    KernelEval(KernelEvalArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Comma-separated query times, e.g. `3,3.5,4`.
    #[arg(long, default_value = "")]
    pub query: String,
    /// Band half-width in standard deviations.
    #[arg(long, default_value_t = gmk_core::forecast::DEFAULT_BAND)]
    pub band: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Exact,
    Euler,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON: `{"alpha","beta"[,"horizon"]}` for exact, `{"omega","breakpoints","blocks"}` for euler.
    #[arg(long)]
    pub params: String,
    /// Comma-separated recording times.
    #[arg(long)]
    pub grid: String,
    #[arg(long, default_value_t = 1)]
    pub n_paths: usize,
    #[arg(long, value_enum, default_value_t = MethodArg::Exact)]
    pub method: MethodArg,
    /// Euler step; every grid time must be a multiple of it.
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
}

#[derive(Debug, Args)]
pub struct BridgeArgs {
    /// JSON: `{"alpha": [[..]], "u": end time, "x_u": [..]}`.
    #[arg(long)]
    pub params: String,
    #[arg(long)]
    pub grid: String,
    #[arg(long, default_value_t = 1)]
    pub n_paths: usize,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// JSON: `{"alpha": [[a]], "beta": [[b]]}` (scalar only).
    #[arg(long)]
    pub params: String,
    /// Increment span.
    #[arg(long)]
    pub s: f64,
    /// Also estimate the correlations from this many exact paths.
    #[arg(long)]
    pub n_paths: Option<usize>,
}

#[derive(Debug, Args)]
pub struct KernelEvalArgs {
    #[arg(long)]
    pub params: String,
    #[arg(long)]
    pub t: f64,
    #[arg(long)]
    pub s: f64,
}

fn grid(list: &str) -> Result<TimeGrid, CliError> {
    Ok(TimeGrid::new(input::parse_times(list)?)?)
}

/// Runs one command and returns the document it produces.
pub fn execute(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Fit(args) => {
            let report = fit(&parse_csv(&args.input)?)?;
            Ok(output::fit_json(&report, max_horizon(&report)))
        }
        Command::Forecast(args) => {
            let data = parse_csv(&args.input)?;
            let report = fit(&data)?;
            let query = input::parse_times(&args.query)?;
            let f = forecast_path(&report, &query, args.band)?;
            Ok(output::forecast_csv(&f, data.dim()))
        }
        Command::Simulate(args) => {
            let grid = grid(&args.grid)?;
            let batch = match args.method {
                MethodArg::Exact => {
                    let params = input::kernel_params(&args.params)?;
                    sample_paths(&params, &grid, args.n_paths, cli.seed)?
                }
                MethodArg::Euler => {
                    let model = input::semiparam_model(&args.params)?;
                    euler_maruyama(&model, args.dt, grid.last(), args.n_paths, cli.seed, &grid)?
                }
            };
            Ok(output::paths_csv(&batch))
        }
        Command::Bridge(args) => {
            let p = input::bridge_params(&args.params)?;
            let batch = sample_bridge(&p.alpha, p.u, &p.x_u, &grid(&args.grid)?, args.n_paths, cli.seed)?;
            Ok(output::paths_csv(&batch))
        }
        Command::Diagnose(args) => {
            let params = input::kernel_params(&args.params)?;
            let mut report = increment_autocorr(&params, args.s)?;
            if let Some(paths) = args.n_paths {
                // windows [0, s] and [s, 2s] on a half-span grid
                let grid = TimeGrid::equispaced(args.s / 2.0, 4)?;
                let batch = sample_paths(&params, &grid, paths, cli.seed)?;
                let (rho, rho_sq) = empirical_increment_autocorr(&batch, 2, 2)?;
                report.empirical_rho = Some(rho);
                report.empirical_rho_sq = Some(rho_sq);
            }
            Ok(output::json_object(&[
                ("s", output::num(report.s)),
                ("rho", output::num(report.theoretical_rho)),
                ("rho_sq", output::num(report.theoretical_rho_sq)),
                ("empirical_rho", output::opt_num(report.empirical_rho)),
                ("empirical_rho_sq", output::opt_num(report.empirical_rho_sq)),
                ("inequality_ok", report.inequality_ok.to_string()),
            ]))
        }
        Command::KernelEval(args) => {
            let params = input::kernel_params(&args.params)?;
            let value = kernel_eval(&params, args.t, args.s)?;
            Ok(output::json_object(&[
                ("t", output::num(args.t)),
                ("s", output::num(args.s)),
                ("value", output::json_matrix(&value)),
            ]))
        }
    }
}

/// Executes and writes the result to `--output` or stdout.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let doc = execute(cli)?;
    match &cli.output {
        Some(path) => std::fs::write(path, doc).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(doc.as_bytes())
                .map_err(|e| CliError::Io(e.to_string()))
        }
    }
}
