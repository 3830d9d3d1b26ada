use std::process::ExitCode;

use acme_ad_cli::{init_workers, run, Cli};
use clap::Parser;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ACME_AD_LOG", "warn")).init();
    let cli = Cli::parse();
    match init_workers(cli.workers).and_then(|_| run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
