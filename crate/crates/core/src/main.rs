use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qmaflow::cli;

/// Parabolic quaternionic Monge-Ampère flow on flat hyperKähler tori.
#[derive(Parser)]
#[command(name = "qmaflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the randomized identity suite.
    Identities {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Where to write the JSON report.
        #[arg(long, default_value = "identities.json")]
        output: PathBuf,
    },
    /// Integrate a configured flow to steady state.
    Flow { config: PathBuf },
    /// Check a snapshot against the stationary equation of a config.
    Check { config: PathBuf, snapshot: PathBuf },
}

fn main() -> ExitCode {
    let args = Cli::parse();
    if let Some(threads) = std::env::var("QMAFLOW_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let mut out = std::io::stdout().lock();
    let code = match args.command {
        Command::Identities {
            n,
            trials,
            seed,
            output,
        } => cli::cmd_identities(n, trials, seed, &output, &mut out),
        Command::Flow { config } => cli::cmd_flow(&config, &mut out),
        Command::Check { config, snapshot } => cli::cmd_check(&config, &snapshot, &mut out),
    };
    ExitCode::from(code as u8)
}
