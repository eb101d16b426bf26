// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use powmfg::config::{self, Command, OutputFormat};
use powmfg::{run, Error};

/// Solve, simulate and sweep the mean-field mining game.
#[derive(Debug, Parser)]
#[command(name = "powmfg", version)]
struct Cli {
    command: CliCommand,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CliCommand {
    AttackModel,
    Solve,
    Simulate,
    BitcoinSweep,
    FeeEvolution,
}

impl From<CliCommand> for Command {
    fn from(c: CliCommand) -> Self {
        match c {
            CliCommand::AttackModel => Command::AttackModel,
            CliCommand::Solve => Command::Solve,
            CliCommand::Simulate => Command::Simulate,
            CliCommand::BitcoinSweep => Command::BitcoinSweep,
            CliCommand::FeeEvolution => Command::FeeEvolution,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
}

const EXIT_INVALID: u8 = 1;
const EXIT_NOT_CONVERGED: u8 = 2;
const EXIT_IO: u8 = 3;

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Parse(_) | Error::Validation { .. } | Error::Domain(_) => EXIT_INVALID,
        Error::NonFinite { .. } => EXIT_NOT_CONVERGED,
        Error::Io { .. } => EXIT_IO,
    }
}

fn run(cli: Cli) -> Result<bool, Error> {
    let text = std::fs::read_to_string(&cli.config).map_err(|source| Error::Io {
        path: cli.config.clone(),
        source,
    })?;
    let mut cfg = config::parse_config_as(&text, Some(cli.command.into()))?;
    cfg.format = match cli.format {
        Format::Csv => OutputFormat::Csv,
    };
    let dir = cli
        .out
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let report = run::execute(&cfg, &dir)?;
    for file in &report.files {
        println!("wrote {}", file.display());
    }
    if !report.converged {
        eprintln!("warning: equilibrium iteration did not converge");
    }
    Ok(report.converged)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_NOT_CONVERGED),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
