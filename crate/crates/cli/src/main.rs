//! Batch CLI over the four analysis stages. All numeric parameters come from
//! the JSON config; flags only select the subcommand and the file paths.

use centralmotion::error::ErrorCategory;
use centralmotion::report;
use centralmotion::RunConfig;
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "centralmotion",
    about = "Quasi-convexity analysis and action-drift experiments for central potentials",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan the radial window for degeneracies and write the residual table.
    Analyze(CommonArgs),
    /// Report the circular-orbit expansion coefficients at the configured I2.
    Expand(CommonArgs),
    /// Evaluate the action map (energies, frequencies, Hessians, Arnold
    /// determinants) over the configured grid.
    Actionmap(CommonArgs),
    /// Run the perturbed long-time integration sweep and summarize drift.
    Drift(CommonArgs),
}

#[derive(clap::Args)]
struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSV/text reports.
    #[arg(long)]
    out: PathBuf,
}

fn exit_code(category: ErrorCategory) -> ExitCode {
    match category {
        ErrorCategory::InvalidInput => ExitCode::from(2),
        ErrorCategory::Validation => ExitCode::from(3),
        ErrorCategory::Numeric => ExitCode::from(4),
    }
}

fn run(command: &Command) -> Result<(), centralmotion::Error> {
    let args = match command {
        Command::Analyze(a) | Command::Expand(a) | Command::Actionmap(a) | Command::Drift(a) => a,
    };
    let config = RunConfig::from_path(&args.config)?;
    match command {
        Command::Analyze(_) => {
            let outcome = report::cmd_analyze(&config, &args.out)?;
            println!("{}", outcome.verdict);
        }
        Command::Expand(_) => {
            report::cmd_expand(&config, &args.out)?;
            println!("expansion written to {}", args.out.join("expand.csv").display());
        }
        Command::Actionmap(_) => {
            let summary = report::cmd_actionmap(&config, &args.out)?;
            println!(
                "action map: {} rows written, {} points failed",
                summary.rows, summary.failures
            );
        }
        Command::Drift(_) => {
            let reports = report::cmd_drift(&config, &args.out)?;
            for r in &reports {
                println!(
                    "epsilon {:.3e}: max |I(t)-I(0)| = {:.6e}, energy error = {:.3e}",
                    r.epsilon, r.max_drift_norm, r.energy_error
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(err.category())
        }
    }
}
