//! Run manifest written as `manifest.json` next to the emitted files.

use std::collections::BTreeMap;

use serde::Serialize;
use sha2::{Digest, Sha256};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

/// A named acceptance check: `value` compared against `threshold`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// `"<="`, `">="` or `"in"` (for `[threshold, upper]`).
    pub relation: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            relation: "<=".into(),
            upper: None,
            passed: value <= threshold,
        }
    }

    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            relation: ">=".into(),
            upper: None,
            passed: value >= threshold,
        }
    }

    pub fn within(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold: lo,
            relation: "in".into(),
            upper: Some(hi),
            passed: lo <= value && value <= hi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileRecord {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

impl FileRecord {
    pub fn of(path: &str, data: &[u8]) -> Self {
        let digest = Sha256::digest(data);
        let sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
        Self {
            path: path.into(),
            bytes: data.len() as u64,
            sha256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRecord {
    pub name: String,
    pub status: Status,
    pub wall_time_s: f64,
    pub checks: Vec<Check>,
    pub files: Vec<FileRecord>,
    /// Free-form notes, e.g. the route used for a limit.
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub schema: u32,
    pub artifact_version: String,
    pub config: BTreeMap<String, String>,
    pub status: Status,
    pub experiments: Vec<ExperimentRecord>,
}

impl RunManifest {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Error => 3,
        }
    }
}
