use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use bellopt::fock::DEFAULT_TRUNCATION;
use bellopt::optimizer::OptimizerConfig;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Built-in defaults, echoed in every report so outputs describe themselves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Defaults {
    pub seed: u64,
    pub starts: usize,
    pub radius: f64,
    pub truncation: usize,
}

impl Default for Defaults {
    fn default() -> Self {
        let cfg = OptimizerConfig::default();
        Self {
            seed: cfg.seed,
            starts: cfg.starts,
            radius: cfg.radius,
            truncation: DEFAULT_TRUNCATION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub version: String,
    pub seed: Option<u64>,
    pub defaults: Defaults,
    pub inputs: Value,
    pub outputs: Value,
}

impl RunReport {
    pub fn new(command: &str, seed: Option<u64>, inputs: Value, outputs: Value) -> Self {
        Self {
            command: command.to_string(),
            version: VERSION.to_string(),
            seed,
            defaults: Defaults::default(),
            inputs,
            outputs,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }
}

/// Comment line with the defaults, written to stderr next to CSV output so
/// the CSV itself keeps exactly its declared header.
pub fn defaults_banner() -> String {
    let d = Defaults::default();
    format!(
        "# bellopt {VERSION} defaults: seed={} starts={} radius={} truncation={}",
        d.seed, d.starts, d.radius, d.truncation
    )
}

pub fn emit(text: &str, output: Option<&Path>) -> io::Result<()> {
    match output {
        Some(path) => File::create(path)?.write_all(text.as_bytes()),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}
