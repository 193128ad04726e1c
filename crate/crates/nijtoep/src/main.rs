use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nijtoep::{CommandError, Config, Outcome, Overrides};

/// Nijenhuis operators in upper triangular Toeplitz form.
#[derive(Parser)]
#[command(name = "nijtoep", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify the operator generated from f1 .. fn at sample points.
    Generate(Common),
    /// Torsions and condition residuals of a field at sample points.
    Check(Common),
    /// Integrate coordinates that bring M to the Jordan block.
    Transform {
        #[command(flatten)]
        common: Common,
        /// Write the grid values of v^1 .. v^n as CSV.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Report destination; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn load(common: &Common) -> Result<Config, CommandError> {
    let mut config = Config::load(&common.config)?;
    config.apply(Overrides {
        tolerance: common.tolerance,
        seed: common.seed,
    });
    Ok(config)
}

fn write(path: Option<&Path>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(Outcome, Option<PathBuf>, Option<PathBuf>), CommandError> {
    Ok(match cli.command {
        Command::Generate(common) => (nijtoep::generate(&load(&common)?)?, common.output, None),
        Command::Check(common) => (nijtoep::check(&load(&common)?)?, common.output, None),
        Command::Transform { common, dump } => {
            let outcome = nijtoep::transform(&load(&common)?, dump.is_some())?;
            (outcome, common.output, dump)
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((outcome, output, dump)) => {
            let written = write(output.as_deref(), &outcome.report).and_then(|_| match (&dump, &outcome.dump) {
                (Some(p), Some(csv)) => std::fs::write(p, csv),
                _ => Ok(()),
            });
            if let Err(e) = written {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
