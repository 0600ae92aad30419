//! Run manifests written next to every output artifact.

use crate::util::{sha256_hex, write_atomic};
use serde::{Deserialize, Serialize};
use std::io;
use std::path::Path;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Option<String>,
    pub seed: Option<u64>,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
    pub tool_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_config_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dataset_ids: Vec<String>,
    /// Effective settings after config and flag merging.
    #[serde(default)]
    pub settings: Vec<(String, String)>,
}

impl RunManifest {
    pub fn new(command: &str) -> RunManifest {
        RunManifest { command: command.to_string(), tool_version: TOOL_VERSION.to_string(), ..Default::default() }
    }

    /// Records an input file with its content hash.
    pub fn input(&mut self, path: &Path) -> io::Result<()> {
        let bytes = std::fs::read(path)?;
        self.inputs.push(InputDigest { path: path.display().to_string(), sha256: sha256_hex(&bytes) });
        Ok(())
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn setting(&mut self, key: &str, value: impl ToString) {
        self.settings.push((key.to_string(), value.to_string()));
    }

    pub fn write_to(&self, path: &Path) -> io::Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("serializable manifest");
        text.push('\n');
        write_atomic(path, text.as_bytes())
    }

    pub fn read(path: &Path) -> io::Result<RunManifest> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_with_input_digest() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.txt");
        std::fs::write(&input, b"abc").unwrap();
        let mut m = RunManifest::new("mutate");
        m.seed = Some(7);
        m.input(&input).unwrap();
        m.output(&dir.path().join("out.jsonl"));
        let p = dir.path().join("mutate.manifest.json");
        m.write_to(&p).unwrap();
        let back = RunManifest::read(&p).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.inputs[0].sha256, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
