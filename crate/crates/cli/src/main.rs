use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ergo_bounds::Error;
use ergo_bounds_cli::config::parse_config;
use ergo_bounds_cli::run::{run, Mode, Options, RunError};

/// Explicit geometric-ergodicity bounds for finite Markov chains and renewal sequences.
#[derive(Parser)]
#[command(name = "ergo-bounds", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check |u(n) - pi(1)| against the coupling tail.
    Renewal(Common),
    /// Compute and check the renewal rate and constant.
    Kendall(Common),
    /// Compute and check the V-norm bound for a finite chain.
    Harris(Common),
    /// Check claimed constants against exact distances.
    Verify(Common),
    /// Monte Carlo cross-checks of coupling and hitting times.
    Simulate(Common),
}

#[derive(Args)]
struct Common {
    /// Problem description (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `[output] dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    horizon: Option<usize>,
    /// Print intermediate constants to stderr.
    #[arg(long)]
    trace: bool,
}

const EXIT_FAILED: u8 = 1;
const EXIT_INPUT: u8 = 2;

fn is_verification_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::HypothesisFail { .. }
            | Error::BoundViolation { .. }
            | Error::ExcessCensoring { .. }
            | Error::DriftViolation { .. }
    )
}

fn write_outputs(dir: &Path, report: &str, csv: Option<&str>) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.toml"), report)?;
    if let Some(csv) = csv {
        fs::write(dir.join("distances.csv"), csv)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, common) = match cli.command {
        Command::Renewal(c) => (Mode::Renewal, c),
        Command::Kendall(c) => (Mode::Kendall, c),
        Command::Harris(c) => (Mode::Harris, c),
        Command::Verify(c) => (Mode::Verify, c),
        Command::Simulate(c) => (Mode::Simulate, c),
    };

    let text = match fs::read_to_string(&common.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("IO_ERROR: {}: {e}", common.config.display());
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let spec = match parse_config(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let opts = Options {
        seed: common.seed,
        horizon: common.horizon,
    };
    let outcome = match run(mode, &spec, &opts) {
        Ok(o) => o,
        Err(RunError::Core(e)) if is_verification_failure(&e) => {
            eprintln!("VERIFICATION_FAILED: {e}");
            return ExitCode::from(EXIT_FAILED);
        }
        Err(e) => {
            eprintln!("ERROR: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    };
    if common.trace {
        for line in &outcome.trace {
            eprintln!("{line}");
        }
    }
    let dir = common
        .out
        .or_else(|| spec.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    if let Err(e) = write_outputs(&dir, &outcome.report.render(), outcome.csv.as_deref()) {
        eprintln!("IO_ERROR: {}: {e}", dir.display());
        return ExitCode::from(EXIT_INPUT);
    }
    if outcome.passed {
        println!("PASS ({})", dir.join("report.toml").display());
        ExitCode::SUCCESS
    } else {
        println!("FAIL ({})", dir.join("report.toml").display());
        ExitCode::from(EXIT_FAILED)
    }
}
