//! `spectral`: fit, generate, cluster, dispatch, converge and diagnose.
//!
//! Data goes to files only; logs go to standard error. Failures print one
//! JSON line `{"error": ..., "command": ...}` on standard error and exit 1
//! (2 for command-line usage errors).

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "spectral",
    version,
    about = "Spectral synthetic weather years and economic dispatch"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "SPECTRAL_THREADS")]
    threads: Option<usize>,
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a spectral model from an hourly panel.
    Fit(FitArgs),
    /// Cluster series of each parameter into regions.
    Cluster(ClusterArgs),
    /// Generate synthetic years from a fitted model.
    Generate(GenerateArgs),
    /// Dispatch one weather year on a grid.
    Dispatch(DispatchArgs),
    /// Generate and dispatch years until annual results converge.
    Converge(ConvergeArgs),
    /// Write diagnostic tables for a model (and optionally its panel).
    Diagnose(DiagnoseArgs),
    /// Write the synthetic three-site reference panel.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub panel: Option<PathBuf>,
    #[arg(long)]
    pub meta: Option<PathBuf>,
    /// Model directory to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub reference_year: Option<i32>,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long)]
    pub panel: Option<PathBuf>,
    #[arg(long)]
    pub meta: Option<PathBuf>,
    #[arg(long, short = 'k')]
    pub clusters: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Output file (clusters.json).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Number of years.
    #[arg(long, conflicts_with = "rse")]
    pub count: Option<usize>,
    /// Generate until dispatch results reach this relative standard error.
    #[arg(long)]
    pub rse: Option<f64>,
    /// Grid for `--rse`.
    #[arg(long)]
    pub problem: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DispatchArgs {
    /// Weather year CSV.
    #[arg(long)]
    pub weather: Option<PathBuf>,
    #[arg(long)]
    pub problem: Option<PathBuf>,
    /// Hours to dispatch (default: all).
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub problem: Option<PathBuf>,
    #[arg(long)]
    pub rse: Option<f64>,
    #[arg(long)]
    pub min_years: Option<usize>,
    #[arg(long)]
    pub max_years: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Also write every accepted weather year as CSV.
    #[arg(long)]
    pub write_years: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Training panel for normality and autocorrelation tables.
    #[arg(long, requires = "meta")]
    pub panel: Option<PathBuf>,
    #[arg(long)]
    pub meta: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub max_lag: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 2)]
    pub years: usize,
    #[arg(long, default_value_t = 2001)]
    pub first_year: i32,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Directory for panel.csv and meta.json.
    #[arg(long)]
    pub out: PathBuf,
}

fn fail(command: &str, message: &str, code: u8) -> ExitCode {
    let line = serde_json::json!({ "error": message, "command": command });
    eprintln!("{line}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.to_string();
            let first = message.lines().next().unwrap_or("invalid arguments");
            return fail("", first.trim_start_matches("error: "), 2);
        }
    };
    let name = match &cli.command {
        Command::Fit(_) => "fit",
        Command::Cluster(_) => "cluster",
        Command::Generate(_) => "generate",
        Command::Dispatch(_) => "dispatch",
        Command::Converge(_) => "converge",
        Command::Diagnose(_) => "diagnose",
        Command::Synth(_) => "synth",
    };
    let result = config::RunConfig::load(cli.config.as_deref()).and_then(|cfg| {
        commands::init_threads(cli.threads.or(cfg.threads))?;
        match cli.command {
            Command::Fit(a) => commands::fit(a, &cfg),
            Command::Cluster(a) => commands::cluster(a, &cfg),
            Command::Generate(a) => commands::generate(a, &cfg),
            Command::Dispatch(a) => commands::dispatch(a, &cfg),
            Command::Converge(a) => commands::converge(a, &cfg),
            Command::Diagnose(a) => commands::diagnose(a, &cfg),
            Command::Synth(a) => commands::synth(a),
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(name, &format!("{e:#}"), 1),
    }
}
