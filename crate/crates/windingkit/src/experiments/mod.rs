//! Batch experiments behind the command-line tool.

mod common;
pub mod config;
pub mod density;
pub mod kernel_run;
pub mod output;
pub mod solenoid;
pub mod sweep;

use std::path::{Path, PathBuf};

pub use common::SWEEP_COLUMNS;
pub use config::ExperimentConfig;
pub use output::{Check, RunOutput};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    SolenoidCheck,
    Sweep,
    Kernel,
    Density,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SolenoidCheck => "solenoid-check",
            Command::Sweep => "sweep",
            Command::Kernel => "kernel",
            Command::Density => "density",
        }
    }
}

/// Run a command in memory.
pub fn execute(command: Command, cfg: &ExperimentConfig) -> Result<RunOutput> {
    match command {
        Command::SolenoidCheck => solenoid::run(cfg),
        Command::Sweep => sweep::run(cfg),
        Command::Kernel => kernel_run::run(cfg),
        Command::Density => density::run(cfg),
    }
}

/// Run a command and write its artifacts and manifest into `out_dir`.
pub fn run_to_dir(command: Command, cfg: &ExperimentConfig, out_dir: &Path) -> Result<(RunOutput, Vec<PathBuf>)> {
    let output = execute(command, cfg)?;
    let paths = output::write_run(out_dir, &cfg.output.prefix, command.name(), cfg.seed, cfg, &output)?;
    Ok((output, paths))
}
