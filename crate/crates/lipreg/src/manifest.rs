//! Run manifests: everything needed to repeat a run.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::io::{write_text, IoError};

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub version: String,
    /// Command line after the program name; `lipreg replay` runs it again.
    pub args: Vec<String>,
    /// Resolved parameters, defaults included.
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub timings_ms: BTreeMap<String, f64>,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<serde_json::Value>,
}

impl RunManifest {
    pub fn new(subcommand: &str, args: Vec<String>) -> Self {
        Self {
            subcommand: subcommand.to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            args,
            status: "running".to_owned(),
            ..Self::default()
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.parameters.insert(key.to_owned(), v);
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.display().to_string());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn timing(&mut self, stage: &str, ms: f64) {
        self.timings_ms.insert(stage.to_owned(), ms);
    }

    pub fn write(&self, path: &Path) -> Result<(), IoError> {
        write_text(path, &serde_json::to_string_pretty(self)?)
    }

    pub fn read(path: &Path) -> Result<Self, IoError> {
        let text = std::fs::read_to_string(path).map_err(|source| IoError::Io {
            path: path.to_owned(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }
}
