//! Result rendering and the manifest written next to every result file.
//!
//! A result written to `out.json` gets `out.json.manifest.json`:
//!
//! ```text
//! {
//!   "command": "eig",
//!   "params": { ... resolved parameters, input files inlined ... },
//!   "inputs_sha256": "<sha256 of the canonical {command, params} JSON>",
//!   "versions": { "trunclap": "0.1.0", "trunclap-cli": "0.1.0" },
//!   "tolerances": { ... },
//!   "format": "json",
//!   "outputs": [ { "file": "out.json", "sha256": "..." } ]
//! }
//! ```
//!
//! Keys are sorted and no timestamps or host data are recorded, so identical
//! runs produce identical bytes.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::params::Format;

/// Rows for the CSV form of a result.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

/// Shortest round-trip form; scientific notation outside `[1e-4, 1e15)`.
pub fn num(v: f64) -> String {
    let m = v.abs();
    if m == 0.0 || !m.is_finite() || (1e-4..1e15).contains(&m) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Everything a command produces.
#[derive(Debug, Clone, Default)]
pub struct Output {
    pub data: Value,
    pub table: Option<Table>,
    /// Printed instead of the rendered data when no output file is given.
    pub text: Option<String>,
    /// Verdict of commands that check an expected property.
    pub passed: Option<bool>,
    pub tolerances: Value,
    /// Files written by the command itself, listed in the manifest.
    pub extra_files: Vec<PathBuf>,
}

impl Output {
    pub fn render(&self, format: Format) -> CliResult<String> {
        match format {
            Format::Json => Ok(serde_json::to_string_pretty(&self.data)? + "\n"),
            Format::Csv => self
                .table
                .as_ref()
                .map(Table::to_csv)
                .ok_or_else(|| CliError::Usage("this command has no CSV form; use --format json".into())),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Serialize)]
struct OutputEntry {
    file: String,
    sha256: String,
}

fn file_name(p: &Path) -> String {
    p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned())
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Writes the result to `out` (plus its manifest) or prints it.
pub fn emit(output: &Output, command: &str, params: &Value, out: Option<&Path>, format: Format) -> CliResult<()> {
    let rendered = output.render(format)?;
    let Some(out) = out else {
        print!("{}", output.text.as_ref().map_or(rendered, |t| format!("{t}\n")));
        return Ok(());
    };
    std::fs::write(out, &rendered)?;
    let mut outputs = vec![OutputEntry {
        file: file_name(out),
        sha256: sha256_hex(rendered.as_bytes()),
    }];
    for extra in &output.extra_files {
        outputs.push(OutputEntry {
            file: file_name(extra),
            sha256: sha256_hex(&std::fs::read(extra)?),
        });
    }
    let inputs = json!({ "command": command, "params": params });
    let manifest = json!({
        "command": command,
        "params": params,
        "inputs_sha256": sha256_hex(&serde_json::to_vec(&inputs)?),
        "versions": {
            "trunclap": trunclap::VERSION,
            "trunclap-cli": env!("CARGO_PKG_VERSION"),
        },
        "tolerances": output.tolerances,
        "format": format,
        "outputs": outputs,
    });
    std::fs::write(manifest_path(out), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(())
}
