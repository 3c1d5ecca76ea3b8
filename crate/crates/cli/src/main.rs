//! `seqtutor` command-line front end.
//!
//! Exit codes: 0 success, 2 usage or validation error, 3 size cap exceeded,
//! 4 runtime invariant violation.

mod args;
mod commands;

use std::process::ExitCode;

use anyhow::{Context as _, Result};
use clap::Parser;
use seqtutor::TutorError;

use args::{Cli, Command, ConfigFile, StateCommand};

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<TutorError>() {
            return match e {
                TutorError::SizeLimit { .. } => 3,
                TutorError::Invariant(_) => 4,
                _ => 2,
            };
        }
    }
    2
}

fn load_config(cli: &Cli) -> Result<ConfigFile> {
    match &cli.config {
        None => Ok(ConfigFile::default()),
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let file = load_config(&cli)?;
    match cli.command {
        Command::Generate(mut a) => {
            a.merge(file.generate);
            commands::generate(a)
        }
        Command::Oracle(mut a) => {
            a.merge(file.oracle);
            commands::oracle(a)
        }
        Command::Run(mut a) => {
            a.merge(file.run);
            commands::run(a)
        }
        Command::Curve(mut a) => {
            a.merge(file.curve);
            commands::curve(a)
        }
        Command::State(StateCommand::Dump(mut a)) => {
            a.merge(file.state_dump);
            commands::state_dump(a)
        }
        Command::State(StateCommand::Load(mut a)) => {
            a.merge(file.state_load);
            commands::state_load(a)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
