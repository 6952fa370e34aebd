use std::path::PathBuf;
use std::process::ExitCode;

use anrat_cli::config::ConfigFile;
use anrat_cli::fetch::{fetch_mnist, FileStatus};
use anrat_cli::run::{run_gridsearch, run_train};
use anrat_cli::suites::{run_verify, Suite};
use anrat_cli::Outcome;
use clap::{Args, Parser, Subcommand};

/// Adaptive risk-averting training experiments.
///
/// Exit codes: 0 success, 1 verification failed, 2 configuration error,
/// 3 data or I/O error, 4 divergence, 5 digest mismatch, 6 network error.
#[derive(Parser)]
#[command(name = "anrat", version, about, long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (INI).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; overrides `train.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model and write metrics, λ trace, snapshot and summary.
    Train(RunArgs),
    /// Train every (learning rate, penalty) cell and keep the best on validation.
    Gridsearch(RunArgs),
    /// Run a verification suite and write its report.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        /// Optional config with a `[verify]` section.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Overrides `verify.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Download the MNIST files listed in a manifest and verify their digests.
    FetchMnist {
        #[arg(long, default_value = "data/mnist.manifest")]
        manifest: PathBuf,
        #[arg(long, default_value = "data/mnist")]
        out: PathBuf,
    },
}

fn experiment(args: &RunArgs) -> Outcome<anrat_cli::config::ExperimentConfig> {
    Ok(ConfigFile::load(&args.config)?.experiment(args.out.as_deref(), args.seed)?)
}

fn execute(command: Command) -> Outcome<String> {
    match command {
        Command::Train(args) => {
            let cfg = experiment(&args)?;
            let run = run_train(&cfg)?;
            Ok(format!(
                "best epoch {} of {}: test error {:.4}, final lambda {:.4}; artifacts in {}",
                run.best_epoch,
                run.records.len(),
                run.test_error,
                run.final_lambda(),
                cfg.output.dir.display()
            ))
        }
        Command::Gridsearch(args) => {
            let cfg = experiment(&args)?;
            let (winner, run) = run_gridsearch(&cfg)?;
            Ok(format!(
                "winner cell {winner}: best epoch {}, test error {:.4}; artifacts in {}",
                run.best_epoch,
                run.test_error,
                cfg.output.dir.display()
            ))
        }
        Command::Verify { suite, config, out, seed } => {
            let file = match config {
                Some(path) => ConfigFile::load(&path)?,
                None => ConfigFile::parse("")?,
            };
            run_verify(suite, &file.verify(seed)?, &out)
        }
        Command::FetchMnist { manifest, out } => {
            let statuses = fetch_mnist(&manifest, &out)?;
            Ok(statuses
                .iter()
                .map(|(file, status)| match status {
                    FileStatus::AlreadyVerified => format!("{file}: already verified"),
                    FileStatus::Downloaded => format!("{file}: downloaded and verified"),
                })
                .collect::<Vec<_>>()
                .join("\n"))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}
