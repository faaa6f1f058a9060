mod args;
mod commands;
mod csvio;
mod error;
mod staging;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::{CliError, CliResult, Code};

fn run(cli: Cli) -> CliResult<String> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::new(Code::Internal, e.to_string()))?;
    }
    match &cli.command {
        Command::Import(a) => commands::import(a),
        Command::Export(a) => commands::export(a),
        Command::Fit(a) => commands::fit_cmd(a),
        Command::Predict(a) => commands::predict_cmd(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Info(a) => commands::info(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help and version exit 0, usage errors exit 2
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Code::Usage as u8 } else { 0 });
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(msg)) => {
            // outputs are already committed; a closed stdout is not a failure
            let _ = writeln!(std::io::stdout(), "{msg}");
            ExitCode::SUCCESS
        }
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(_) => {
            eprintln!("error: internal failure");
            ExitCode::from(Code::Internal as u8)
        }
    }
}
