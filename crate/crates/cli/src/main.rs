mod args;
mod config;
mod run;

use std::process::ExitCode;

use clap::Parser;
use qrfuse::Error;

use args::{Cli, Command};

const EXIT_CONFIG: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_SOLVER: u8 = 4;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::EmptyTrainingSet { .. } => EXIT_CONFIG,
        Error::Solver { .. } | Error::AllCandidatesFailed | Error::MalformedLp(_) => EXIT_SOLVER,
        Error::ConstantColumn { .. }
        | Error::DimensionMismatch { .. }
        | Error::Data(_)
        | Error::Row { .. }
        | Error::Csv(_)
        | Error::Io(_)
        | Error::Json(_) => EXIT_DATA,
    }
}

fn run(cli: Cli) -> qrfuse::Result<()> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(Error::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    match &cli.command {
        Command::Fit(a) => run::cmd_fit(a),
        Command::Cv(a) => run::cmd_cv(a),
        Command::Simulate(a) => run::cmd_simulate(a),
        Command::Forecast(a) => run::cmd_forecast(a),
    }
}

fn main() -> ExitCode {
    let args = match config::expand(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let cli = Cli::parse_from(args);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
