//! Versioned run reports.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};
use vesselkit::report::ConditionReport;

pub const SCHEMA_VERSION: &str = "vesselkit-report/1";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct NamedReport {
    pub name: String,
    pub report: ConditionReport,
}

/// One numeric result with the tolerance it is held to.
#[derive(Debug, Clone, Serialize)]
pub struct Measurement {
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Measurement {
    pub fn at_most(value: f64, tolerance: f64) -> Self {
        Measurement { value, tolerance, pass: value <= tolerance }
    }

    pub fn at_least(value: f64, tolerance: f64) -> Self {
        Measurement { value, tolerance, pass: value >= tolerance }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    pub tool_version: &'static str,
    pub command: String,
    pub input_digest: String,
    pub seed: u64,
    pub pass: bool,
    pub checks: Vec<NamedReport>,
    pub tables: BTreeMap<String, serde_json::Value>,
    pub warnings: Vec<String>,
    /// Wall-clock milliseconds per phase; absent in deterministic mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<BTreeMap<String, f64>>,
}

impl RunReport {
    pub fn new(command: &str, input: &[u8], seed: u64, deterministic: bool) -> Self {
        RunReport {
            schema: SCHEMA_VERSION,
            tool_version: TOOL_VERSION,
            command: command.to_string(),
            input_digest: digest(input),
            seed,
            pass: true,
            checks: Vec::new(),
            tables: BTreeMap::new(),
            warnings: Vec::new(),
            timings_ms: if deterministic { None } else { Some(BTreeMap::new()) },
        }
    }

    pub fn check(&mut self, name: &str, report: ConditionReport) {
        self.pass &= report.pass;
        self.checks.push(NamedReport { name: name.to_string(), report });
    }

    pub fn table<T: Serialize>(&mut self, name: &str, value: &T) {
        let v = serde_json::to_value(value).expect("report tables serialize");
        self.tables.insert(name.to_string(), v);
    }

    pub fn warn(&mut self, text: impl Into<String>) {
        self.warnings.push(text.into());
    }

    pub fn time(&mut self, phase: &str, start: Instant) {
        if let Some(t) = &mut self.timings_ms {
            t.insert(phase.to_string(), start.elapsed().as_secs_f64() * 1e3);
        }
    }

    pub fn failures(&self) -> Vec<String> {
        self.checks
            .iter()
            .flat_map(|c| c.report.failures().into_iter().map(move |e| format!("{}: {}", c.name, e.name)))
            .collect()
    }
}

pub fn digest(bytes: &[u8]) -> String {
    let hash = Sha256::digest(bytes);
    hash.iter().map(|b| format!("{b:02x}")).collect()
}
