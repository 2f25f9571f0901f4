mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use graph_dmd::dmd::Engine;

use config::ExperimentConfig;
use error::{CliError, EXIT_VALIDATION};

#[derive(Parser, Debug)]
#[command(name = "graph-dmd", version, about = "Dynamic mode decomposition of graph and tensor time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Two-mode synthetic benchmark of graph DMD against exact DMD.
    Synth(Common),
    /// Aggregate a trip log into hourly graphs and extract periodic modes.
    Trips(Common),
    /// Classify simulated collective-motion trials by their spectra.
    Swarm(Common),
    /// Decompose a binary tensor whose last mode is time.
    Decompose {
        #[command(flatten)]
        common: Common,
        /// Input tensor, overriding `decompose.input`.
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, value_parser = parse_engine)]
    engine: Option<Engine>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Log progress to stderr.
    #[arg(short, long)]
    verbose: bool,
}

fn parse_engine(s: &str) -> Result<Engine, String> {
    s.parse().map_err(|e: graph_dmd::Error| e.to_string())
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if self.seed.is_some() {
            cfg.seed = self.seed;
        }
        if self.epsilon.is_some() {
            cfg.epsilon = self.epsilon;
        }
        if self.engine.is_some() {
            cfg.engine = self.engine;
        }
        if self.out.is_some() {
            cfg.out = self.out.clone();
        }
        cfg.resolve()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let common = match &cli.command {
        Command::Synth(c) | Command::Trips(c) | Command::Swarm(c) => c,
        Command::Decompose { common, .. } => common,
    };
    let level = if common.verbose { "info" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    let mut cfg = common.config()?;
    if cfg.engine.is_some() && !matches!(cli.command, Command::Decompose { .. }) {
        log::warn!("--engine only applies to `decompose`; all engines run");
    }
    match cli.command {
        Command::Synth(_) => commands::synth(&cfg),
        Command::Trips(_) => commands::trips(&cfg),
        Command::Swarm(_) => commands::swarm(&cfg),
        Command::Decompose { input, .. } => {
            if input.is_some() {
                cfg.decompose.input = input;
            }
            commands::decompose(&cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_VALIDATION) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Core(graph_dmd::Error::RankZero(_)) = e {
                eprintln!("empty result: no mode survived the truncation");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
