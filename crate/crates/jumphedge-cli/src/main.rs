use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use jumphedge::experiment::{self, CounterexampleConfig, ExperimentConfig, ExperimentError};

#[derive(Parser)]
#[command(name = "jumphedge", version, about = "Discretisation studies for hedging under exponential Lévy models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    config: PathBuf,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Rate sweep over n: error norms, slope fits and a verdict.
    Run(Common),
    /// Riemann jumps versus jump-corrected jumps for a compensated Poisson price.
    Counterexample(Common),
    /// Size of the combined nets per n.
    Cardinality(Common),
    /// Semigroup, envelope, weight and martingale checks.
    CheckBounds(Common),
}

const EXIT_ERROR: u8 = 1;
const EXIT_RATE_FAIL: u8 = 2;

fn load(common: &Common) -> Result<ExperimentConfig, ExperimentError> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(dir) = &common.out {
        cfg.output.dir = Some(dir.clone());
    }
    if let Some(seed) = common.seed {
        cfg.sim.seed = seed;
    }
    Ok(cfg)
}

/// Writes to stdout; a reader that closed the pipe early is not an error.
fn emit(text: &str) -> Result<(), ExperimentError> {
    use std::io::Write;
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), ExperimentError> {
    emit(&(serde_json::to_string_pretty(value)? + "\n"))
}

fn execute(command: &Command) -> Result<bool, ExperimentError> {
    match command {
        Command::Run(c) => {
            let report = experiment::run_experiment(&load(c)?)?;
            emit(&experiment::rates_csv(&report.rows))?;
            for v in &report.verdicts {
                eprintln!("{v}");
            }
            Ok(report.pass)
        }
        Command::Counterexample(c) => {
            let mut cfg = CounterexampleConfig::from_json(&std::fs::read_to_string(&c.config)?)?;
            if let Some(dir) = &c.out {
                cfg.output.dir = Some(dir.clone());
            }
            if let Some(seed) = c.seed {
                cfg.seed = seed;
            }
            let report = experiment::run_counterexample(&cfg)?;
            print_json(&report)?;
            Ok(report.pass)
        }
        Command::Cardinality(c) => {
            let report = experiment::run_cardinality_study(&load(c)?)?;
            print_json(&report)?;
            Ok(true)
        }
        Command::CheckBounds(c) => {
            let report = experiment::run_check_bounds(&load(c)?)?;
            emit(&report.verdicts.iter().map(|v| format!("{v}\n")).collect::<String>())?;
            Ok(report.pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Run(c) | Command::Counterexample(c) | Command::Cardinality(c) | Command::CheckBounds(c) => c,
    };
    if let Some(k) = common.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_ERROR);
        }
    }
    match execute(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_RATE_FAIL),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
