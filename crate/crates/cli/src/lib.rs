//! Command-line front end: argument parsing, config loading and the
//! `pairs` / `prioritize` / `run` / `evaluate` / `report` subcommands.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};

use mrprio_core::executor::CassetteMode;
use mrprio_core::prioritizer::Strategy;

use crate::commands::Session;
use crate::config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "mrprio", version, about = "Prioritize metamorphic relations for LLM fairness testing")]
pub struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true, default_value = "mrprio.json")]
    pub config: PathBuf,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Use this value for every seed in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StrategyArg {
    Diversity,
    Distance,
    Fault,
    Random,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Diversity => Strategy::Diversity,
            StrategyArg::Distance => Strategy::Distance,
            StrategyArg::Fault => Strategy::Fault,
            StrategyArg::Random => Strategy::Random,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Record,
    Replay,
    Live,
}

impl From<ModeArg> for CassetteMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Record => CassetteMode::Record,
            ModeArg::Replay => CassetteMode::Replay,
            ModeArg::Live => CassetteMode::Live,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Derive source/follow-up pairs for the selected MRs.
    Pairs,
    /// Order the MRs with one strategy.
    Prioritize {
        #[arg(long, value_enum)]
        strategy: StrategyArg,
    },
    /// Execute the pairs against the model and build the outcome matrix.
    Run {
        /// Cassette mode (defaults to the config's).
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Compute FDR curves and TTFF for every ordering present.
    Evaluate,
    /// Print a summary of the evaluation report.
    Report,
}

pub fn session(cli: &Cli) -> Result<Session> {
    let mut config = RunConfig::load(&cli.config)?;
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        config.override_seeds(seed);
    }
    Session::new(config)
}

/// Run one parsed command, printing a short summary to stdout.
pub fn execute(cli: &Cli) -> Result<()> {
    let session = session(cli)?;
    match &cli.command {
        Command::Pairs => {
            for s in commands::cmd_pairs(&session)? {
                println!("{:<5} {:>5} pairs {:>5} skipped", s.mr_id, s.pairs, s.skipped);
            }
        }
        Command::Prioritize { strategy } => {
            let path = commands::cmd_prioritize(&session, (*strategy).into())?;
            println!("wrote {}", path.display());
        }
        Command::Run { mode } => {
            let r = commands::cmd_run(&session, mode.map(Into::into))?;
            println!(
                "{} pairs, {} distinct prompts, {} errored; wrote {}",
                r.pairs_total,
                r.unique_prompts,
                r.errored.len(),
                session.layout.matrix().display()
            );
        }
        Command::Evaluate => {
            commands::cmd_evaluate(&session)?;
            println!("wrote {}", session.layout.report().display());
        }
        Command::Report => print!("{}", commands::cmd_report(&session)?),
    }
    Ok(())
}

/// Process exit code for an error: 1 validation, 2 execution, 3 replay miss.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    use mrprio_core::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<E>() {
            if e.is_replay_miss() {
                return 3;
            }
            return match e {
                E::Validation(_) | E::Parse { .. } | E::Io { .. } | E::Json(_) => 1,
                E::Transport(_) | E::Provider(_) | E::Execution { .. } | E::TooManyErrors { .. } => 2,
                E::ReplayMiss { .. } => 3,
            };
        }
    }
    1
}
