use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use windingkit::experiments::{run_to_dir, Command, ExperimentConfig};
use windingkit::Error;

#[derive(Parser)]
#[command(
    name = "windingkit",
    version,
    about = "Surface-current Biot-Savart experiments on toroidal winding surfaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Uniform poloidal current against the analytic solenoid field.
    SolenoidCheck(RunArgs),
    /// Tikhonov λ sweep for the configured target.
    Sweep(RunArgs),
    /// Kernel current construction and verification.
    Kernel(RunArgs),
    /// Paired sweeps contrasting two plasma placements.
    Density(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (results do not depend on this).
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the configured random seed.
    #[arg(long)]
    seed: Option<u64>,
}

const EXIT_CONFIG: u8 = 1;
const EXIT_CHECK: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let (command, args) = match cli.command {
        Cmd::SolenoidCheck(a) => (Command::SolenoidCheck, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
        Cmd::Kernel(a) => (Command::Kernel, a),
        Cmd::Density(a) => (Command::Density, a),
    };
    if let Some(n) = args.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(EXIT_CONFIG);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    let mut cfg = match ExperimentConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    match run_to_dir(command, &cfg, &args.out) {
        Ok((output, paths)) => {
            for c in &output.checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            for p in &paths {
                println!("wrote {}", p.display());
            }
            if output.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_CHECK)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_)
                | Error::InvalidGeometry(_)
                | Error::InvalidArgument(_)
                | Error::Io(_)
                | Error::Json(_) => ExitCode::from(EXIT_CONFIG),
                _ => ExitCode::from(EXIT_CHECK),
            }
        }
    }
}
