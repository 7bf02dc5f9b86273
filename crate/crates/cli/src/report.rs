use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot access {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("config does not match the {command} schema: {source}")]
    Schema { command: &'static str, source: serde_json::Error },

    #[error("grid reference {path} could not be loaded: {reason}")]
    MissingGrid { path: PathBuf, reason: String },

    #[error("invalid config: {0}")]
    Input(String),

    #[error("scenario {scenario}: singular configuration: {source}")]
    Singular { scenario: String, source: causal_kernels::error::Error },

    #[error("scenario {scenario}: {source}")]
    Library { scenario: String, source: causal_kernels::error::Error },
}

/// A numeric table written as `<stem>.csv`.
pub struct Table {
    pub stem: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(stem: impl Into<String>, header: &[&'static str]) -> Self {
        Self { stem: stem.into(), header: header.to_vec(), rows: vec![] }
    }

    pub fn push(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|v| v.to_string()).collect());
    }

    fn csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Everything a command produced.
#[derive(Default)]
pub struct Run {
    pub seed: u64,
    pub scenarios: Vec<Value>,
    pub tables: Vec<Table>,
    pub expectation_failed: bool,
}

#[derive(Serialize)]
struct Report<'a> {
    command: &'a str,
    version: &'a str,
    config_sha256: String,
    seed: u64,
    scenarios: &'a [Value],
    tables: Vec<String>,
}

pub fn config_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn write(out: &Path, command: &str, config: &[u8], run: &Run) -> Result<(), CliError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Io { path, source }
    };
    std::fs::create_dir_all(out).map_err(io(out))?;
    let mut names = vec![];
    for table in &run.tables {
        let name = format!("{}.csv", table.stem);
        let path = out.join(&name);
        std::fs::write(&path, table.csv()).map_err(io(&path))?;
        names.push(name);
    }
    let report = Report {
        command,
        version: causal_kernels::VERSION,
        config_sha256: config_hash(config),
        seed: run.seed,
        scenarios: &run.scenarios,
        tables: names,
    };
    let path = out.join("report.json");
    let mut text = serde_json::to_string_pretty(&report).expect("report serialises");
    text.push('\n');
    std::fs::write(&path, text).map_err(io(&path))
}
