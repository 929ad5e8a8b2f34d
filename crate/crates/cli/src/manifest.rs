use std::collections::BTreeMap;
use std::path::Path;

use aaa_mdp::model::ModelOptions;
use serde::Serialize;

/// Everything needed to reproduce a run. Contains no timestamps so that
/// repeated runs produce identical bytes.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: &'static str,
    pub parameter_file: String,
    pub parameter_digest: String,
    pub horizon: (u32, u32),
    pub options: ModelOptions,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub widths: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub factors: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub bins: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy: Option<String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(
        command: &str,
        parameter_file: &Path,
        parameter_digest: String,
        horizon: (u32, u32),
        options: &ModelOptions,
    ) -> Self {
        Self {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION"),
            parameter_file: parameter_file.display().to_string(),
            parameter_digest,
            horizon,
            options: *options,
            seed: None,
            replicates: None,
            widths: BTreeMap::new(),
            factors: Vec::new(),
            bins: Vec::new(),
            policy: None,
            outputs: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serialises");
        s.push('\n');
        s
    }
}
