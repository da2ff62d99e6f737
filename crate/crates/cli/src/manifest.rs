//! Run manifests: every command drops one next to its outputs so a run can
//! be reproduced bit-for-bit (fixed seeds, fixed solver options, no wall
//! times in any output file).

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use fraclmi::Result;

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub inputs: Vec<String>,
    pub options: BTreeMap<String, String>,
    pub out_dir: String,
    pub seed: Option<u64>,
    pub solver: String,
}

impl RunManifest {
    pub fn new(command: &'static str, out_dir: &Path) -> Self {
        Self {
            tool: "fraclmi",
            version: env!("CARGO_PKG_VERSION"),
            command,
            inputs: Vec::new(),
            options: BTreeMap::new(),
            out_dir: out_dir.display().to_string(),
            seed: None,
            solver: std::env::var("FRACLMI_SOLVER").unwrap_or_else(|_| "barrier".into()),
        }
    }

    pub fn input(mut self, path: &Path) -> Self {
        self.inputs.push(path.display().to_string());
        self
    }

    pub fn option(mut self, key: &str, value: impl ToString) -> Self {
        self.options.insert(key.to_string(), value.to_string());
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn write(&self, out_dir: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).expect("serializable manifest");
        std::fs::write(out_dir.join("manifest.json"), json)?;
        Ok(())
    }
}
