use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use levy_wave::config::ExperimentConfig;
use levy_wave::experiment::{run, Command};
use levy_wave::Error;

/// Stochastic wave equation driven by Lévy and Gaussian noise.
#[derive(Parser)]
#[command(name = "levy-wave", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Tabulate the normal-approximation ratio over the κ × ε grid.
    CheckCondition(RunArgs),
    /// Simulate paths of u (and v coefficients) and dump them as CSV.
    Simulate(RunArgs),
    /// Lévy against Gaussian Monte Carlo, KS and moments per ε.
    Compare(RunArgs),
    /// Hermite coefficients of the configured test function.
    Hermite(RunArgs),
    /// Run the invariant suite.
    Validate(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Output directory; LEVY_WAVE_OUT takes precedence.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Sub::CheckCondition(a) => (Command::CheckCondition, a),
        Sub::Simulate(a) => (Command::Simulate, a),
        Sub::Compare(a) => (Command::Compare, a),
        Sub::Hermite(a) => (Command::Hermite, a),
        Sub::Validate(a) => (Command::Validate, a),
    };
    let mut config = match ExperimentConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    if let Some(s) = args.seed {
        config.seed = s;
    }
    let out = std::env::var_os("LEVY_WAVE_OUT")
        .map(PathBuf::from)
        .or(args.out)
        .unwrap_or_else(|| PathBuf::from(&config.out_dir));

    match run(command, &config, &out, args.threads) {
        Ok(res) => {
            for c in &res.checks {
                println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            println!("{} -> {}", command.name(), out.join("report.json").display());
            if res.pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e @ Error::Config { .. }) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
