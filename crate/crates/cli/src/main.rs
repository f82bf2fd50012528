//! `qcs`: config-driven runner for link simulations, pass traces, precision
//! shadows and network timelines.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod analyze;
mod config;
mod link;
mod network;
mod output;
mod shadow;
mod trace;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ConfigError, Kind};
use output::OutputDir;
use qcs_core::QcsError;

#[derive(Parser)]
#[command(name = "qcs", version, about = "Satellite quantum clock synchronization scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo two-way link: timestamps, histograms, offset estimates.
    SimulateLink(Common),
    /// Closed-form link budget and precision along a pass.
    PassTrace(Common),
    /// Precision shadow on the ground at one instant.
    Shadow(Common),
    /// Pairwise synchronization timelines for a station network.
    Network(Common),
    /// Offset recovery from dumped timestamp sets.
    Analyze(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file (JSON), or a manifest from an earlier run.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug)]
pub enum RunError {
    Config(String),
    Runtime(String),
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e.0)
    }
}

impl From<QcsError> for RunError {
    fn from(e: QcsError) -> Self {
        RunError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Runtime(e.to_string())
    }
}

/// Parameter problems the core only detects once the run starts.
pub fn config_error(e: QcsError) -> RunError {
    match e {
        QcsError::InvalidParameter { .. } => RunError::Config(e.to_string()),
        other => other.into(),
    }
}

fn execute(kind: Kind, args: &Common) -> Result<(), RunError> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| RunError::Runtime(format!("thread pool: {e}")))?;
    }
    let base = args.config.parent().map(PathBuf::from).unwrap_or_default();
    let scenario = config::load(&args.config)?.resolve(kind, args.seed, &base)?;
    let out = OutputDir::create(&args.out).map_err(|e| RunError::Runtime(format!("{}: {e}", args.out.display())))?;
    let inputs = match kind {
        Kind::SimulateLink => link::run(&scenario, &out).map(|_| BTreeMap::new()),
        Kind::PassTrace => trace::run(&scenario, &out).map(|_| BTreeMap::new()),
        Kind::Shadow => shadow::run(&scenario, &out).map(|_| BTreeMap::new()),
        Kind::Network => network::run(&scenario, &out).map(|_| BTreeMap::new()),
        Kind::Analyze => analyze::run(&scenario, &out),
    }?;
    out.finish(&scenario, &inputs)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::SimulateLink(a) => (Kind::SimulateLink, a),
        Command::PassTrace(a) => (Kind::PassTrace, a),
        Command::Shadow(a) => (Kind::Shadow, a),
        Command::Network(a) => (Kind::Network, a),
        Command::Analyze(a) => (Kind::Analyze, a),
    };
    match execute(kind, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(RunError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(RunError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
