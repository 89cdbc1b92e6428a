//! Per-command parameters.
//!
//! Every struct doubles as a clap argument group and as the `params` object of
//! an experiment spec, so a flag and its JSON key always share one default.
//! JSON keys are the long flag names with `-` replaced by `_`, except `hR` and `R`.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use trunclap::eigen::SolverConfig;

use crate::error::{CliError, CliResult};

pub mod defaults {
    use std::f64::consts::PI;

    pub fn k() -> usize {
        1
    }
    pub fn k2() -> usize {
        2
    }
    pub fn zero() -> f64 {
        0.0
    }
    pub fn one() -> f64 {
        1.0
    }
    pub fn half() -> f64 {
        0.5
    }
    pub fn seed() -> u64 {
        0
    }
    pub fn width() -> usize {
        1
    }
    pub fn profile_points() -> usize {
        trunclap::radial::DEFAULT_PROFILE_POINTS
    }
    pub fn delta() -> f64 {
        0.05
    }
    pub fn deltas() -> Vec<f64> {
        vec![0.1, 0.05, 0.02]
    }
    pub fn region_scale() -> f64 {
        2.0
    }
    pub fn probes() -> usize {
        10_000
    }
    pub fn divisions() -> usize {
        5
    }
    pub fn flow_tol() -> f64 {
        1e-3
    }
    pub fn shooting_tol() -> f64 {
        1e-7
    }
    pub fn eps() -> Vec<f64> {
        vec![0.3, 0.2, 0.1]
    }
    pub fn mid_radius() -> f64 {
        1.5 * PI
    }
    pub fn scales() -> Vec<f64> {
        vec![0.5, 2.0]
    }
    pub fn disc_divisions() -> usize {
        32
    }
    pub fn segment() -> super::Source<trunclap::covering::SetSpec> {
        super::Source::Inline(trunclap::covering::SetSpec::Segment {
            a: vec![-0.5, 0.0, 0.0],
            b: vec![0.5, 0.0, 0.0],
            gap: 1e-3,
        })
    }
}

/// A JSON value given inline (`'{...}'`) or as a path to a JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Source<T> {
    Inline(T),
    Path(PathBuf),
}

impl<T: DeserializeOwned> Source<T> {
    /// Replaces a path by the parsed file contents.
    pub fn resolve(&mut self) -> CliResult<()> {
        if let Source::Path(p) = self {
            let text = std::fs::read_to_string(&*p)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))?;
            *self = Source::Inline(serde_json::from_str(&text)?);
        }
        Ok(())
    }

    pub fn value(&self) -> CliResult<&T> {
        match self {
            Source::Inline(v) => Ok(v),
            Source::Path(p) => Err(CliError::Usage(format!("{} was not loaded", p.display()))),
        }
    }
}

impl<T: DeserializeOwned> FromStr for Source<T> {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim_start();
        if t.starts_with('{') || t.starts_with('[') {
            serde_json::from_str(t).map(Source::Inline).map_err(|e| e.to_string())
        } else {
            Ok(Source::Path(PathBuf::from(s)))
        }
    }
}

impl<T: Serialize> fmt::Display for Source<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Inline(v) => write!(f, "{}", serde_json::to_string(v).map_err(|_| fmt::Error)?),
            Source::Path(p) => write!(f, "{}", p.display()),
        }
    }
}

/// A dense matrix given as JSON rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Matrix(pub Vec<Vec<f64>>);

impl FromStr for Matrix {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_str(s).map(Matrix).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SignArg {
    Minus,
    Plus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    InversePower,
    Flow,
    Shooting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Tolerances and caps of the grid eigensolver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields, default)]
pub struct SolverArgs {
    #[arg(long, default_value_t = SolverConfig::default().policy_tol)]
    pub policy_tol: f64,
    #[arg(long, default_value_t = SolverConfig::default().linear_tol)]
    pub linear_tol: f64,
    #[arg(long, default_value_t = SolverConfig::default().eig_tol)]
    pub eig_tol: f64,
    #[arg(long, default_value_t = SolverConfig::default().residual_tol)]
    pub residual_tol: f64,
    #[arg(long, default_value_t = SolverConfig::default().max_policy_updates)]
    pub max_policy_updates: usize,
    #[arg(long, default_value_t = SolverConfig::default().max_power_steps)]
    pub max_power_steps: usize,
    #[arg(long, default_value_t = SolverConfig::default().max_linear_iterations)]
    pub max_linear_iterations: usize,
}

impl Default for SolverArgs {
    fn default() -> Self {
        let c = SolverConfig::default();
        Self {
            policy_tol: c.policy_tol,
            linear_tol: c.linear_tol,
            eig_tol: c.eig_tol,
            residual_tol: c.residual_tol,
            max_policy_updates: c.max_policy_updates,
            max_power_steps: c.max_power_steps,
            max_linear_iterations: c.max_linear_iterations,
        }
    }
}

impl SolverArgs {
    pub fn config(&self) -> SolverConfig {
        SolverConfig {
            policy_tol: self.policy_tol,
            linear_tol: self.linear_tol,
            max_policy_updates: self.max_policy_updates,
            max_power_steps: self.max_power_steps,
            max_linear_iterations: self.max_linear_iterations,
            eig_tol: self.eig_tol,
            residual_tol: self.residual_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct PkEvalArgs {
    /// Symmetric matrix as JSON rows, e.g. '[[3,0],[0,1]]'.
    #[arg(long)]
    #[serde(default)]
    pub matrix: Option<Matrix>,
    #[arg(long, default_value_t = defaults::k())]
    #[serde(default = "defaults::k")]
    pub k: usize,
    /// Drift coefficient; with a gradient the full operator value is reported.
    #[arg(long, default_value_t = defaults::zero())]
    #[serde(default = "defaults::zero")]
    pub h: f64,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(default)]
    pub gradient: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value_t = SignArg::Minus)]
    #[serde(default = "minus")]
    pub sign: SignArg,
    /// Run the identity suite on this many random matrices instead.
    #[arg(long)]
    #[serde(default)]
    pub suite: Option<usize>,
    #[arg(long, default_value_t = defaults::seed())]
    #[serde(default = "defaults::seed")]
    pub seed: u64,
}

fn minus() -> SignArg {
    SignArg::Minus
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct BarrierArgs {
    /// Ambient dimension (default k + 1).
    #[arg(long)]
    #[serde(default)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = defaults::k2())]
    #[serde(default = "defaults::k2")]
    pub k: usize,
    #[arg(long = "hR", default_value_t = defaults::zero())]
    #[serde(rename = "hR", default = "defaults::zero")]
    pub h_r: f64,
    #[arg(long = "R", default_value_t = defaults::one())]
    #[serde(rename = "R", default = "defaults::one")]
    pub radius: f64,
    /// Cutoff scale a (default R/e).
    #[arg(long)]
    #[serde(default)]
    pub a: Option<f64>,
    #[arg(long, default_value_t = defaults::profile_points())]
    #[serde(default = "defaults::profile_points")]
    pub points: usize,
    /// Check every (k, hR, a) combination of the residual suite instead.
    #[arg(long)]
    #[serde(default)]
    pub sweep: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct CoverArgs {
    /// Set description (inline JSON or path), e.g. '{"kind":"segment","a":[0,0,0],"b":[1,0,0],"gap":0.001}'.
    #[arg(long)]
    pub set: Source<trunclap::covering::SetSpec>,
    /// Selects the gauge: k1, k2 or k3plus.
    #[arg(long, default_value_t = defaults::k2())]
    #[serde(default = "defaults::k2")]
    pub k: usize,
    #[arg(long = "R", default_value_t = defaults::one())]
    #[serde(rename = "R", default = "defaults::one")]
    pub radius: f64,
    #[arg(long, value_delimiter = ',', default_values_t = defaults::deltas())]
    #[serde(default = "defaults::deltas")]
    pub deltas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct CertifyArgs {
    #[arg(long, default_value_t = defaults::segment())]
    #[serde(default = "defaults::segment")]
    pub set: Source<trunclap::covering::SetSpec>,
    #[arg(long, default_value_t = defaults::k2())]
    #[serde(default = "defaults::k2")]
    pub k: usize,
    #[arg(long = "hR", default_value_t = defaults::half())]
    #[serde(rename = "hR", default = "defaults::half")]
    pub h_r: f64,
    #[arg(long, default_value_t = defaults::delta())]
    #[serde(default = "defaults::delta")]
    pub delta: f64,
    /// Ω is the ball about the set's bounding center with this multiple of its bounding radius.
    #[arg(long, default_value_t = defaults::region_scale())]
    #[serde(default = "defaults::region_scale")]
    pub region_scale: f64,
    #[arg(long, default_value_t = defaults::probes())]
    #[serde(default = "defaults::probes")]
    pub probes: usize,
    #[arg(long, default_value_t = defaults::seed())]
    #[serde(default = "defaults::seed")]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct VerifyBoundArgs {
    #[arg(long, default_value_t = defaults::segment())]
    #[serde(default = "defaults::segment")]
    pub set: Source<trunclap::covering::SetSpec>,
    #[arg(long, default_value_t = defaults::k2())]
    #[serde(default = "defaults::k2")]
    pub k: usize,
    #[arg(long = "hR", default_value_t = defaults::half())]
    #[serde(rename = "hR", default = "defaults::half")]
    pub h_r: f64,
    #[arg(long, value_delimiter = ',', default_values_t = defaults::deltas())]
    #[serde(default = "defaults::deltas")]
    pub deltas: Vec<f64>,
    #[arg(long, default_value_t = defaults::region_scale())]
    #[serde(default = "defaults::region_scale")]
    pub region_scale: f64,
    #[arg(long, default_value_t = defaults::probes())]
    #[serde(default = "defaults::probes")]
    pub probes: usize,
    #[arg(long, default_value_t = defaults::seed())]
    #[serde(default = "defaults::seed")]
    pub seed: u64,
    /// Grid spacing of the cover neighborhood is delta / divisions.
    #[arg(long, default_value_t = defaults::divisions())]
    #[serde(default = "defaults::divisions")]
    pub divisions: usize,
    #[command(flatten)]
    #[serde(default)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct EigArgs {
    /// Domain description, e.g. '{"dim":2,"spacing":0.03125,"shape":"ball","params":{"radius":1}}'.
    #[arg(long)]
    pub domain: Source<trunclap::grid::DomainSpec>,
    #[arg(long, default_value_t = defaults::k())]
    #[serde(default = "defaults::k")]
    pub k: usize,
    #[arg(long, default_value_t = defaults::zero())]
    #[serde(default = "defaults::zero")]
    pub h: f64,
    /// Stencil width: lattice directions with entries in [-width, width].
    #[arg(long, default_value_t = defaults::width())]
    #[serde(default = "defaults::width")]
    pub width: usize,
    /// Methods to run; flow without --bracket and shooting comparisons also run inverse power.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = inverse_power())]
    #[serde(default = "inverse_power")]
    pub method: Vec<MethodArg>,
    /// Flow bisection bracket; defaults to half and twice the inverse-power value.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    #[serde(default)]
    pub bracket: Option<Vec<f64>>,
    /// Flow bisection width relative to the top of the bracket.
    #[arg(long, default_value_t = defaults::flow_tol())]
    #[serde(default = "defaults::flow_tol")]
    pub flow_tol: f64,
    #[arg(long, default_value_t = defaults::shooting_tol())]
    #[serde(default = "defaults::shooting_tol")]
    pub shooting_tol: f64,
    /// Also write the eigenfunction (binary if the name ends in .bin, CSV otherwise).
    #[arg(long)]
    #[serde(default)]
    pub eigenfunction: Option<PathBuf>,
    #[command(flatten)]
    #[serde(default)]
    pub solver: SolverArgs,
}

fn inverse_power() -> Vec<MethodArg> {
    vec![MethodArg::InversePower]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct AnnulusArgs {
    #[arg(long, value_delimiter = ',', default_values_t = defaults::eps())]
    #[serde(default = "defaults::eps")]
    pub eps: Vec<f64>,
    #[arg(long, default_value_t = defaults::k())]
    #[serde(default = "defaults::k")]
    pub k: usize,
    /// Drift (default k divided by the mid radius).
    #[arg(long)]
    #[serde(default)]
    pub h: Option<f64>,
    #[arg(long, default_value_t = defaults::mid_radius())]
    #[serde(default = "defaults::mid_radius")]
    pub mid_radius: f64,
    /// Grid spacing is eps / divisions.
    #[arg(long, default_value_t = defaults::divisions())]
    #[serde(default = "defaults::divisions")]
    pub divisions: usize,
    /// Cross-check every row with flow bisection.
    #[arg(long)]
    #[serde(default)]
    pub flow: bool,
    #[command(flatten)]
    #[serde(default)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct ScaleCheckArgs {
    #[arg(long, value_delimiter = ',', default_values_t = defaults::scales())]
    #[serde(default = "defaults::scales")]
    pub scales: Vec<f64>,
    /// Unit disc spacing is 1 / disc_divisions.
    #[arg(long, default_value_t = defaults::disc_divisions())]
    #[serde(default = "defaults::disc_divisions")]
    pub disc_divisions: usize,
    #[arg(long = "disc-k", default_value_t = defaults::k())]
    #[serde(default = "defaults::k")]
    pub disc_k: usize,
    #[arg(long = "disc-hR", default_value_t = defaults::half())]
    #[serde(rename = "disc_hR", default = "defaults::half")]
    pub disc_h_r: f64,
    #[arg(long, default_value_t = defaults::segment())]
    #[serde(default = "defaults::segment")]
    pub set: Source<trunclap::covering::SetSpec>,
    #[arg(long, default_value_t = defaults::k2())]
    #[serde(default = "defaults::k2")]
    pub k: usize,
    #[arg(long = "hR", default_value_t = defaults::half())]
    #[serde(rename = "hR", default = "defaults::half")]
    pub h_r: f64,
    #[arg(long, default_value_t = defaults::delta())]
    #[serde(default = "defaults::delta")]
    pub delta: f64,
    #[arg(long, default_value_t = defaults::region_scale())]
    #[serde(default = "defaults::region_scale")]
    pub region_scale: f64,
    #[command(flatten)]
    #[serde(default)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct ConstantsArgs {
    #[arg(long, default_value_t = defaults::k2())]
    #[serde(default = "defaults::k2")]
    pub k: usize,
    #[arg(long = "hR", default_value_t = defaults::zero())]
    #[serde(rename = "hR", default = "defaults::zero")]
    pub h_r: f64,
    #[arg(long = "R", default_value_t = defaults::one())]
    #[serde(rename = "R", default = "defaults::one")]
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct AcceptanceArgs {
    /// Run only these criteria (1-8).
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub only: Option<Vec<usize>>,
}
