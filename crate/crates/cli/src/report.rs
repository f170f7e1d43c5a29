//! Machine-readable reports. The body is a deterministic function of the
//! command and its inputs; timestamps and wall times sit in the header.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// SHA-256 of the compact JSON encoding.
pub fn digest(v: &impl Serialize) -> String {
    let bytes = serde_json::to_vec(v).expect("serializable");
    hex::encode(Sha256::digest(&bytes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub id: String,
    /// The statement being checked.
    pub anchor: String,
    /// Digest of the instance the check ran on.
    pub instance: String,
    pub pass: bool,
    /// Enough to rerun the check, present on failure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
    pub detail: Value,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Header {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub arguments: Vec<String>,
    pub started_unix: u64,
    /// Milliseconds per section, plus `total`.
    pub wall_ms: BTreeMap<String, u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Body {
    pub command: String,
    pub pass: bool,
    pub total: usize,
    pub passed: usize,
    pub checks: Vec<Check>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub header: Header,
    pub body: Body,
}

/// Collects checks and section timings while a command runs.
pub struct Builder {
    command: String,
    started: Instant,
    started_unix: u64,
    checks: Vec<Check>,
    wall_ms: BTreeMap<String, u64>,
}

impl Builder {
    pub fn new(command: &str) -> Self {
        let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Builder {
            command: command.into(),
            started: Instant::now(),
            started_unix,
            checks: Vec::new(),
            wall_ms: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    /// Run `f` and record its wall time under `section`.
    pub fn timed<T>(&mut self, section: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.wall_ms.insert(section.into(), t.elapsed().as_millis() as u64);
        out
    }

    pub fn finish(mut self) -> Report {
        self.checks.sort_by(|a, b| a.id.cmp(&b.id));
        self.wall_ms.insert("total".into(), self.started.elapsed().as_millis() as u64);
        let passed = self.checks.iter().filter(|c| c.pass).count();
        Report {
            header: Header {
                schema_version: REPORT_SCHEMA_VERSION,
                tool: "relk".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                arguments: std::env::args().skip(1).collect(),
                started_unix: self.started_unix,
                wall_ms: self.wall_ms,
            },
            body: Body {
                command: self.command,
                pass: passed == self.checks.len(),
                total: self.checks.len(),
                passed,
                checks: self.checks,
            },
        }
    }
}

pub fn write(report: &Report, out: Option<&Path>) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(report).expect("serializable report");
    text.push('\n');
    match out {
        Some(p) => std::fs::write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
