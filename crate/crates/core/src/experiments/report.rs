use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportStatus {
    Pass,
    Fail,
    /// A validity gate failed; targets were not evaluated.
    Invalid,
    NumericFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub target: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config_hash: String,
    pub status: ReportStatus,
    pub checks: Vec<Check>,
    pub metrics: BTreeMap<String, Value>,
    pub warnings: Vec<String>,
    pub outputs: Vec<String>,
    /// Resolved configuration as TOML.
    pub config: String,
}

pub fn config_hash(resolved_toml: &str) -> String {
    hex::encode(Sha256::digest(resolved_toml.as_bytes()))
}

impl ExperimentReport {
    pub fn new(experiment: &str, resolved_toml: String) -> Self {
        ExperimentReport {
            experiment: experiment.to_string(),
            config_hash: config_hash(&resolved_toml),
            status: ReportStatus::Pass,
            checks: Vec::new(),
            metrics: BTreeMap::new(),
            warnings: Vec::new(),
            outputs: Vec::new(),
            config: resolved_toml,
        }
    }

    pub fn metric(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.metrics.insert(key.to_string(), v);
    }

    pub fn check(&mut self, name: &str, value: f64, target: impl Into<String>, pass: bool) {
        self.checks.push(Check {
            name: name.to_string(),
            value,
            target: target.into(),
            pass,
        });
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    /// Status from the checks unless an earlier stage already decided it.
    pub fn settle(&mut self) {
        if self.status == ReportStatus::Pass && self.checks.iter().any(|c| !c.pass) {
            self.status = ReportStatus::Fail;
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.status {
            ReportStatus::NumericFailure => 3,
            _ => 0,
        }
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| crate::Error::Format(e.to_string()))?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_and_status() {
        let mut r = ExperimentReport::new("simulate", "a = 1\n".into());
        assert_eq!(r.config_hash.len(), 64);
        assert_eq!(r.config_hash, config_hash("a = 1\n"));
        assert_ne!(r.config_hash, config_hash("a = 2\n"));
        r.check("x", 1.0, "<= 2", true);
        r.settle();
        assert_eq!(r.status, ReportStatus::Pass);
        r.check("y", 3.0, "<= 2", false);
        r.settle();
        assert_eq!(r.status, ReportStatus::Fail);
        assert_eq!(r.exit_code(), 0);
        r.status = ReportStatus::NumericFailure;
        assert_eq!(r.exit_code(), 3);
    }
}
