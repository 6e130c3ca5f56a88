use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use infotrade::sim::{emit_report, run_experiment, Execution, ExperimentKind, ScenarioConfig};

/// Runs a trust-free information trade scenario or one of the property suites.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Cli {
    /// Scenario config (JSON); the built-in honest scenario if omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the trial count.
    #[arg(long)]
    trials: Option<usize>,
    /// Directory for transcripts and summaries.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// One of run, truthfulness, collusion, spe, deposits.
    #[arg(long, default_value = "run")]
    experiment: ExperimentKind,
    /// Run trials on one thread.
    #[arg(long)]
    sequential: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = (|| {
        let mut config = match &cli.config {
            Some(path) => ScenarioConfig::load(path)?,
            None => ScenarioConfig::honest(),
        };
        if let Some(seed) = cli.seed {
            config.seed = seed;
        }
        let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
        let (transcripts, report) = run_experiment(cli.experiment, &config, cli.trials, exec)?;
        if cli.experiment == ExperimentKind::Run {
            config.trials = report.trials;
        }
        emit_report(&transcripts, &report, &config, &cli.out)?;
        Ok::<_, infotrade::sim::SimError>(report)
    })();
    match result {
        Ok(report) => {
            print!("{}", report.summary_text());
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
