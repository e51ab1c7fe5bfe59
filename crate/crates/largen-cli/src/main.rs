use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use largen::config::{parse_config, RunConfig};
use largen::runner::{self, Outcome};

/// Lattice simulator, large-N oracle and 1/N graph expansion for the O(N)
/// φ⁴ model on the 2-torus.
#[derive(Parser)]
#[command(name = "largen", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory; overrides `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for independent chains.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Dump C, C², G and L with the constants a_ε and c1.
    Kernels,
    /// Run chains and write observable time series.
    Simulate,
    /// Estimate from stored series and compare with predictions.
    Estimate,
    /// Predicted correlations for the configured observables.
    Oracle,
    /// Graph expansion term table.
    Expand,
    /// Deterministic identity checks.
    Verify,
    /// Simulate inline and compare with predictions.
    Compare,
}

fn load(cli: &Cli) -> largen::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| largen::Error::io(path, e))?;
            parse_config(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> largen::Result<Outcome> {
    let cfg = load(cli)?;
    let out = cfg.output_dir.clone();
    let threads = cli.threads.max(1);
    match cli.command {
        Command::Kernels => runner::run_kernels(&cfg, &out),
        Command::Simulate => runner::run_simulate(&cfg, &out, threads),
        Command::Estimate => runner::run_estimate(&cfg, &out),
        Command::Oracle => runner::run_oracle(&cfg, &out),
        Command::Expand => runner::run_expand(&cfg, &out),
        Command::Verify => runner::run_verify(&cfg, &out),
        Command::Compare => runner::run_compare(&cfg, &out, threads),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", f.display());
            }
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("checks failed");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
