//! Drivers behind the `trunclap` binary.
//!
//! Every subcommand is a [`Command`] variant whose arguments also parse from the
//! `params` object of an [`ExperimentSpec`]; the acceptance experiments in
//! [`experiments`] call the same functions the subcommands do.

pub mod commands;
mod error;
pub mod experiments;
pub mod output;
pub mod params;

use std::path::PathBuf;

use clap::Subcommand;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use error::{CliError, CliResult};
use output::Output;
use params::*;

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Truncated traces of one matrix, or the random identity suite.
    PkEval(PkEvalArgs),
    /// Radial barrier profile, or the residual and sup-bound sweep.
    Barrier(BarrierArgs),
    /// Greedy covers and gauge covering sums of a sampled set.
    Cover(CoverArgs),
    /// Assemble a supersolution certificate and verify it on probes.
    Certify(CertifyArgs),
    /// Principal eigenvalue of the grid operator.
    Eig(EigArgs),
    /// Certified bounds along a refinement sequence, checked against the grid eigenvalue.
    VerifyBound(VerifyBoundArgs),
    /// Eigenvalues of thin annuli.
    Annulus(AnnulusArgs),
    /// Scale law of the grid eigenvalue and of the certified bound.
    ScaleCheck(ScaleCheckArgs),
    /// Constants of the certified bound for given k and hR.
    Constants(ConstantsArgs),
    /// Run the acceptance criteria and print one PASS/FAIL line each.
    Acceptance(AcceptanceArgs),
    /// Run an experiment described by a JSON spec file.
    Run {
        #[arg(long)]
        spec: PathBuf,
    },
}

/// Subcommands addressable from a spec file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    PkEval,
    Barrier,
    Cover,
    Certify,
    Eig,
    VerifyBound,
    Annulus,
    ScaleCheck,
    Constants,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: PathBuf,
    #[serde(default)]
    pub format: Format,
}

/// `{"command": "...", "params": {...}, "output": {"path": "...", "format": "json|csv"}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub command: CommandName,
    #[serde(default = "empty_object")]
    pub params: Value,
    #[serde(default)]
    pub output: Option<OutputSpec>,
}

fn empty_object() -> Value {
    Value::Object(Default::default())
}

fn parse<T: serde::de::DeserializeOwned>(params: &Value) -> CliResult<T> {
    serde_json::from_value(params.clone()).map_err(|e| CliError::Usage(format!("invalid params: {e}")))
}

impl ExperimentSpec {
    pub fn into_command(self) -> CliResult<Command> {
        let p = &self.params;
        Ok(match self.command {
            CommandName::PkEval => Command::PkEval(parse(p)?),
            CommandName::Barrier => Command::Barrier(parse(p)?),
            CommandName::Cover => Command::Cover(parse(p)?),
            CommandName::Certify => Command::Certify(parse(p)?),
            CommandName::Eig => Command::Eig(parse(p)?),
            CommandName::VerifyBound => Command::VerifyBound(parse(p)?),
            CommandName::Annulus => Command::Annulus(parse(p)?),
            CommandName::ScaleCheck => Command::ScaleCheck(parse(p)?),
            CommandName::Constants => Command::Constants(parse(p)?),
        })
    }
}

/// A finished command: its name, resolved parameters and output.
#[derive(Debug, Clone)]
pub struct Executed {
    pub name: &'static str,
    pub params: Value,
    pub output: Output,
}

impl Command {
    /// Loads referenced input files, then runs. `Run` must be expanded first.
    pub fn execute(mut self) -> CliResult<Executed> {
        match &mut self {
            Command::Cover(a) => a.set.resolve()?,
            Command::Certify(a) => a.set.resolve()?,
            Command::VerifyBound(a) => a.set.resolve()?,
            Command::ScaleCheck(a) => a.set.resolve()?,
            Command::Eig(a) => a.domain.resolve()?,
            _ => {}
        }
        let (name, params, output) = match &self {
            Command::PkEval(a) => ("pk-eval", serde_json::to_value(a)?, commands::pk_eval(a)?),
            Command::Barrier(a) => ("barrier", serde_json::to_value(a)?, commands::barrier(a)?),
            Command::Cover(a) => ("cover", serde_json::to_value(a)?, commands::cover(a)?),
            Command::Certify(a) => ("certify", serde_json::to_value(a)?, commands::certify(a)?),
            Command::Eig(a) => ("eig", serde_json::to_value(a)?, commands::eig(a)?),
            Command::VerifyBound(a) => ("verify-bound", serde_json::to_value(a)?, commands::verify_bound(a)?),
            Command::Annulus(a) => ("annulus", serde_json::to_value(a)?, commands::annulus(a)?),
            Command::ScaleCheck(a) => ("scale-check", serde_json::to_value(a)?, commands::scale_check(a)?),
            Command::Constants(a) => ("constants", serde_json::to_value(a)?, commands::constants(a)?),
            Command::Acceptance(a) => ("acceptance", serde_json::to_value(a)?, experiments::acceptance(a)?),
            Command::Run { .. } => return Err(CliError::Usage("nested run".into())),
        };
        Ok(Executed { name, params, output })
    }
}

/// Caps rayon's pool at `TRUNCLAP_THREADS` when set.
pub fn init_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var("TRUNCLAP_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("TRUNCLAP_THREADS = '{v}' is not an integer")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}
