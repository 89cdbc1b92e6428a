use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;
use trunclap_cli::output::emit;
use trunclap_cli::params::Format;
use trunclap_cli::{init_threads, CliError, CliResult, Command, ExperimentSpec};

/// Truncated-Laplacian barriers, covering bounds and grid eigenvalues.
#[derive(Debug, Parser)]
#[command(name = "trunclap", version)]
struct Cli {
    /// Write the result here (plus `<out>.manifest.json`) instead of printing it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

fn run(cli: Cli) -> CliResult<bool> {
    init_threads()?;
    let (command, out, format) = match cli.command {
        Command::Run { spec } => {
            let text = std::fs::read_to_string(&spec)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", spec.display())))?;
            let spec: ExperimentSpec =
                serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid spec: {e}")))?;
            let (out, format) = match &spec.output {
                Some(o) => (Some(o.path.clone()), o.format),
                None => (cli.out, cli.format),
            };
            (spec.into_command()?, out, format)
        }
        c => (c, cli.out, cli.format),
    };
    let done = command.execute()?;
    emit(&done.output, done.name, &done.params, out.as_deref(), format)?;
    Ok(done.output.passed.unwrap_or(true))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        // a checked property failed; the result was still written
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            let diag = json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{diag}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
