use std::process::ExitCode;

use bloch_nitsche_cli::run::run;
use bloch_nitsche_cli::{resolve, Cli, THREADS_ENV};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, flags) = cli.command.mode_and_flags();
    let env_threads = std::env::var(THREADS_ENV).ok();
    let cfg = match resolve(mode, flags, env_threads.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&cfg) {
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            for line in &outcome.summary {
                println!("{line}");
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
