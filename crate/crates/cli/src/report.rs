use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL: &str = "berry";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// The computation ran but did not resolve a phase (exit code 2).
    Unresolved,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Self::Ok => 0,
            Self::Unresolved => 2,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub args: Vec<String>,
    pub config: Value,
    pub result: Value,
    pub wall_time_s: f64,
}

impl RunReport {
    pub fn new(command: &str, config: Value, result: Value) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool: TOOL,
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            args: std::env::args().skip(1).collect(),
            config,
            result,
            wall_time_s: 0.0,
        }
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }
}

/// What a command hands back to `main`: the full report, the one-line stdout
/// summary and the exit status.
pub struct Completed {
    pub report: RunReport,
    pub summary: Value,
    pub status: Status,
    pub out: Option<PathBuf>,
}

pub fn to_value<T: Serialize>(v: &T) -> anyhow::Result<Value> {
    Ok(serde_json::to_value(v)?)
}
