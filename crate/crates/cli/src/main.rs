//! `mhc` command-line tool.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;

use config::{
    CnotOptions, CodegenOptions, DecodeOptions, EncodeOptions, FitOptions, MemoryOptions, Merge, OverheadOptions,
};

/// Exit status when a self-test finds a violated property.
const VIOLATION_EXIT: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "mhc", version, about = "Many-hypercube code construction, encoding, decoding and simulation")]
struct Cli {
    /// TOML file whose keys are the long flags of the chosen subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Check the acceptance properties of the results and exit nonzero on a violation.
    #[arg(long, global = true)]
    self_test: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Emit a code instance as JSON.
    Codegen(CodegenOptions),
    /// Generate an encoder circuit and its qubit census.
    Encode(EncodeOptions),
    /// Block-error rates under code-capacity noise.
    SimulateMemory(MemoryOptions),
    /// Teleported logical-CNOT benchmark under circuit noise.
    SimulateCnot(CnotOptions),
    /// Encoder qubit counts, optionally with retries under circuit noise.
    Overhead(OverheadOptions),
    /// Power-law fit of rates written by the simulate commands.
    Fit(FitOptions),
    /// Decode readouts, one per line.
    Decode(DecodeOptions),
}

fn resolve<T: Merge + DeserializeOwned>(flags: T, file: &Option<PathBuf>) -> Result<T> {
    Ok(match file {
        Some(path) => flags.merge(config::load(path)?),
        None => flags,
    })
}

fn run(cli: Cli) -> Result<commands::Outcome> {
    let st = cli.self_test;
    let file = &cli.config;
    match cli.command {
        Command::Codegen(o) => commands::codegen(&resolve(o, file)?, st),
        Command::Encode(o) => commands::encode(&resolve(o, file)?, st),
        Command::SimulateMemory(o) => commands::simulate_memory(&resolve(o, file)?, st),
        Command::SimulateCnot(o) => commands::simulate_cnot(&resolve(o, file)?, st),
        Command::Overhead(o) => commands::overhead(&resolve(o, file)?, st),
        Command::Fit(o) => commands::fit(&resolve(o, file)?, st),
        Command::Decode(o) => commands::decode(&resolve(o, file)?, st),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let self_test = cli.self_test;
    match run(cli) {
        Ok(out) => {
            for v in &out.violations {
                eprintln!("violation: {v}");
            }
            if self_test && !out.violations.is_empty() {
                ExitCode::from(VIOLATION_EXIT)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
