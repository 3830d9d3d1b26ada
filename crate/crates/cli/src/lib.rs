//! Library side of the `acme-ad` binary, exposed so the commands can be
//! driven from tests.

pub mod args;
mod commands;
pub mod error;

pub use args::Cli;
pub use error::{CliError, Result};

use args::Command;

/// Sizes the global worker pool. Call at most once per process.
pub fn init_workers(workers: Option<usize>) -> Result<()> {
    if let Some(n) = workers {
        if n == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("cannot size worker pool: {e}")))?;
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Train(a) => commands::train(a),
        Command::Explain(a) => commands::explain(a),
        Command::Experiment(a) => commands::experiment(a),
        Command::Grid(a) => commands::grid(a),
        Command::Synth(a) => commands::synth(a),
        Command::Serve(a) => commands::serve(a),
    }
}
