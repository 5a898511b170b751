use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

/// Provenance record written next to every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub command: String,
    pub model: String,
    pub params: BTreeMap<String, f64>,
    pub seed: Option<u64>,
    pub outputs: Vec<String>,
    pub tool_version: String,
    /// ISO-8601, UTC.
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(
        command: &str,
        model: String,
        params: BTreeMap<String, f64>,
        seed: Option<u64>,
    ) -> Self {
        Self {
            command: command.to_string(),
            model,
            params,
            seed,
            outputs: Vec::new(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}

/// `<out>.manifest.json`
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}
