//! `triz`: interactive solving, evaluation batches, case management and
//! knowledge-base queries.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration
//! error, 3 validation findings.

mod checkpoints;
mod config;
mod eval;
mod solve;
mod tools;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use triz_core::gateway::{BackendMode, Gateway};

use config::CliConfig;

/// Bad invocation or configuration; exit code 2.
#[derive(Debug)]
pub struct Usage(pub String);

/// Input that failed validation; exit code 3. Findings are already printed.
#[derive(Debug)]
pub struct Findings(pub usize);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

impl std::fmt::Display for Findings {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} validation finding(s)", self.0)
    }
}

impl std::error::Error for Findings {}

#[derive(Parser)]
#[command(name = "triz", version, about = "TRIZ-guided problem solving with language models")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct Global {
    /// Configuration file (TOML).
    #[arg(long, global = true, env = "TRIZ_CONFIG")]
    config: Option<PathBuf>,
    /// Session store directory.
    #[arg(long, global = true)]
    store: Option<PathBuf>,
    /// Serve model replies from recorded transcripts in this directory.
    #[arg(long, global = true, conflicts_with = "record")]
    replay: Option<PathBuf>,
    /// Call the provider and record every exchange into this directory.
    #[arg(long, global = true)]
    record: Option<PathBuf>,
    /// Log more detail (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Run the four-step workflow on a problem, pausing at each decision.
    Solve(solve::SolveArgs),
    /// Batch evaluation and report artifacts.
    #[command(subcommand)]
    Eval(eval::EvalCommand),
    /// Case collection tools.
    #[command(subcommand)]
    Cases(tools::CasesCommand),
    /// Contradiction matrix queries.
    #[command(subcommand)]
    Matrix(tools::MatrixCommand),
    /// Engineering parameter queries.
    #[command(subcommand)]
    Params(tools::ParamsCommand),
    /// Inventive principle queries.
    #[command(subcommand)]
    Principles(tools::PrinciplesCommand),
    /// Knowledge base maintenance.
    #[command(subcommand)]
    Kb(tools::KbCommand),
    /// Inspect stored sessions.
    #[command(subcommand)]
    Sessions(tools::SessionsCommand),
}

/// Resolved configuration plus global flags.
pub struct Context {
    pub config: CliConfig,
    pub global: Global,
}

impl Context {
    pub fn store_dir(&self) -> PathBuf {
        self.global.store.clone().unwrap_or_else(|| self.config.store.clone())
    }

    pub fn is_replay(&self) -> bool {
        self.global.replay.is_some()
    }

    pub fn gateway(&self) -> anyhow::Result<Gateway> {
        let mode = match (&self.global.replay, &self.global.record) {
            (Some(dir), _) => BackendMode::Replay(dir.clone()),
            (None, Some(dir)) => BackendMode::Record(dir.clone()),
            (None, None) => BackendMode::Live,
        };
        Ok(Gateway::open(&mode, self.config.gateway.clone())?)
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let config = CliConfig::load(cli.global.config.as_deref())?;
    let problems = config.problems();
    if !problems.is_empty() {
        return Err(Usage(format!("invalid configuration: {}", problems.join("; "))).into());
    }
    let ctx = Context { config, global: cli.global };
    match cli.command {
        Command::Solve(a) => solve::run(&ctx, a),
        Command::Eval(c) => eval::run(&ctx, c),
        Command::Cases(c) => tools::cases(&ctx, c),
        Command::Matrix(c) => tools::matrix(c),
        Command::Params(c) => tools::params(c),
        Command::Principles(c) => tools::principles(c),
        Command::Kb(c) => tools::kb(c),
        Command::Sessions(c) => tools::sessions(&ctx, c),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<Findings>() => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(e) if e.is::<Usage>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
