use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use covert_cli::{bounds_csv, exit_code, simulate, validate, DecoderChoice, SimulateConfig};

/// Covert signalling over AWGN: bounds, desk-scale simulations and self-checks.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum DecoderArg {
    Ml,
    Threshold,
}

#[derive(Subcommand)]
enum Command {
    /// Write the lower and upper covert-throughput bounds over an epsilon grid.
    Bounds {
        /// Covertness budgets, comma separated.
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        delta: Vec<f64>,
        #[arg(long)]
        eps_min: f64,
        #[arg(long)]
        eps_max: f64,
        #[arg(long)]
        eps_step: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the zero-augmented BPSK code and measure error and divergence.
    Simulate {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        /// Base message count; omitted means the construction's own target.
        #[arg(long)]
        messages: Option<u64>,
        #[arg(long, default_value_t = 1)]
        keys: u64,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "ml")]
        decoder: DecoderArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the invariant suite.
    Validate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Break one tolerance on purpose to confirm failures are reported.
        #[arg(long)]
        self_test_fail: bool,
    },
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Bounds {
            delta,
            eps_min,
            eps_max,
            eps_step,
            out,
        } => {
            let csv = bounds_csv(&delta, eps_min, eps_max, eps_step)?;
            write(&out, &csv)?;
            Ok(0)
        }
        Command::Simulate {
            n,
            epsilon,
            delta,
            sigma,
            messages,
            keys,
            trials,
            samples,
            seed,
            decoder,
            out,
        } => {
            let config = SimulateConfig {
                n,
                epsilon,
                delta,
                sigma,
                messages,
                keys,
                trials,
                samples,
                seed,
                decoder: match decoder {
                    DecoderArg::Ml => DecoderChoice::MaximumLikelihood,
                    DecoderArg::Threshold => DecoderChoice::Threshold,
                },
            };
            let report = simulate(&config)?;
            write(&out, &report.to_csv())?;
            print!("{}", report.summary());
            Ok(if report.passed() { 0 } else { 1 })
        }
        Command::Validate { seed, self_test_fail } => {
            let report = validate(seed, self_test_fail);
            print!("{}", report.render());
            Ok(if report.passed() { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
