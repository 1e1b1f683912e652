use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fracorbit_cli::{compare, run, CliError, ExperimentConfig, RunSummary};

#[derive(Parser)]
#[command(
    name = "fracorbit",
    version,
    about = "Moving-source fractional diffusion: simulate, reconstruct, verify"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// override the config's output directory
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Per-column max abs difference of the CSVs in two run directories.
    Compare { a: PathBuf, b: PathBuf },
    /// Run the built-in oracle suites.
    Verify {
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn report(summary: &RunSummary) -> ExitCode {
    for line in &summary.lines {
        println!("{line}");
    }
    println!("artifacts in {}", summary.output.display());
    if summary.passed {
        ExitCode::SUCCESS
    } else {
        eprintln!("verification failed");
        ExitCode::from(2)
    }
}

fn execute(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Run { config, output } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            Ok(report(&run(&cfg, output.as_deref())?))
        }
        Command::Verify { output } => {
            let cfg = ExperimentConfig::verify_default();
            Ok(report(&run(&cfg, output.as_deref())?))
        }
        Command::Compare { a, b } => {
            let r = compare(&a, &b)?;
            println!("file,column,max_abs_diff");
            for c in &r.columns {
                println!("{},{},{:.16e}", c.file, c.column, c.max_abs_diff);
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
