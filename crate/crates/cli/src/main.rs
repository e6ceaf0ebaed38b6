mod args;
mod commands;
mod input;
mod output;

use std::io::Write;
use std::process::ExitCode;

use clap::{CommandFactory, Parser};

use args::{Cli, Command};

/// Failure of a run, split by exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad or missing arguments and input files: exit 2 with usage text.
    Usage(String),
    /// The computation itself failed: exit 1.
    Compute(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn compute(msg: impl Into<String>) -> Self {
        CliError::Compute(msg.into())
    }
}

impl From<phasekit::Error> for CliError {
    fn from(e: phasekit::Error) -> Self {
        match e {
            phasekit::Error::Config(_) | phasekit::Error::UnknownSystem(_) => CliError::Usage(e.to_string()),
            other => CliError::Compute(other.to_string()),
        }
    }
}

/// What a successful command produced.
pub struct Outcome {
    pub params: serde_json::Value,
    pub result: serde_json::Value,
    /// Text for stdout in place of the JSON envelope (the CSV of `simulate`).
    pub stdout_override: Option<String>,
}

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::Simulate(_) => "simulate",
        Command::Mi(_) => "mi",
        Command::Embed(_) => "embed",
        Command::Dimension(_) => "dimension",
        Command::Lyapunov(_) => "lyapunov",
        Command::Identify(_) => "identify",
        Command::Predict(_) => "predict",
        Command::Stepwise(_) => "stepwise",
        Command::Symmetry(_) => "symmetry",
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let name = subcommand_name(&cli.command);
    let outcome = commands::dispatch(cli)?;
    if let Some(text) = outcome.stdout_override {
        std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::compute(e.to_string()))?;
        return Ok(());
    }
    let text = output::envelope(name, outcome.params, outcome.result);
    // `simulate` already wrote its CSV to --out, so its envelope goes to stdout.
    match &cli.out {
        Some(path) if !matches!(cli.command, Command::Simulate(_)) => output::write_file(path, &text),
        _ => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::compute(e.to_string())),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            let name = subcommand_name(&cli.command);
            let mut cmd = Cli::command();
            let usage = cmd
                .find_subcommand_mut(name)
                .map(|c| c.clone().bin_name(format!("phasekit {name}")).render_usage().to_string())
                .unwrap_or_default();
            eprintln!("error: {msg}\n\n{usage}\n\nFor more information, try 'phasekit {name} --help'.");
            ExitCode::from(2)
        }
        Err(CliError::Compute(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
