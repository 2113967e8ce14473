mod args;
mod commands;

use std::panic;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::EXIT_INTERNAL;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = match &cli.command {
        Command::Discretize(a) => a.search.threads,
        Command::Learn(a) => a.search.threads,
        _ => None,
    };
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }

    let result = panic::catch_unwind(|| match &cli.command {
        Command::Discretize(a) => commands::discretize(a),
        Command::Learn(a) => commands::learn(a),
        Command::Score(a) => commands::score(a),
        Command::Simulate(a) => commands::simulate(a),
    });
    match result {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(f)) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code as u8)
        }
        Err(_) => {
            eprintln!("error: internal invariant violated");
            ExitCode::from(EXIT_INTERNAL as u8)
        }
    }
}
