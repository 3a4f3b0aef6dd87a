//! `kronmle` command-line front end.
//!
//! Exit codes: 0 success, 1 input error (JSON on stderr), 2 no MLE
//! (divergence, an unbounded likelihood or a defective 2x2 pencil),
//! 3 iteration limit reached.

mod args;
mod commands;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command, MonteCarlo};
use commands::CliError;

fn dispatch(cli: &Cli) -> Result<commands::Output, CliError> {
    match &cli.command {
        Command::Fit(a) => commands::fit_cmd(a),
        Command::Threshold(a) => commands::threshold_cmd(a),
        Command::S2(a) => commands::s2_cmd(a),
        Command::Minrank(a) => commands::minrank_cmd(a),
        Command::Canonical(a) => commands::canonical_cmd(a),
        Command::Classify2x2(a) => commands::classify2x2_cmd(a),
        Command::Montecarlo(MonteCarlo::Eig2x2(a)) => commands::eig2x2_cmd(a),
        Command::Montecarlo(MonteCarlo::Threshold(a)) => commands::mc_threshold_cmd(a),
        Command::Sample(a) => commands::sample_cmd(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::input("Usage", e.to_string().trim_end());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.code);
        }
    };
    match dispatch(&cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout
                .write_all(out.stdout.as_bytes())
                .and_then(|_| stdout.flush())
                .is_err()
            {
                return ExitCode::from(commands::EXIT_INPUT);
            }
            ExitCode::from(out.code)
        }
        Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::from(err.code)
        }
    }
}
