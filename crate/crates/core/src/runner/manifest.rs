use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::spec::InstanceSpec;
use crate::error::{NlcsError, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OutputRecord {
    /// Relative to the manifest's directory.
    pub path: String,
    pub sha256: String,
}

/// Provenance record written next to every command's outputs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub spec: InstanceSpec,
    pub command: String,
    pub config: Value,
    pub outputs: Vec<OutputRecord>,
    pub versions: BTreeMap<String, String>,
    pub wall_time: f64,
    pub hash: String,
    #[serde(skip)]
    started: Option<Instant>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn digest(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

impl RunManifest {
    pub fn begin(spec: &InstanceSpec, command: &str, config: Value) -> Self {
        let canon = json!({ "spec": spec, "command": command, "config": config });
        let hash = digest(canon.to_string().as_bytes());
        let versions = BTreeMap::from([("nlcs".to_string(), env!("CARGO_PKG_VERSION").to_string())]);
        Self {
            spec: spec.clone(),
            command: command.into(),
            config,
            outputs: Vec::new(),
            versions,
            wall_time: 0.0,
            hash,
            started: Some(Instant::now()),
        }
    }

    /// Writes a JSON object output stamped with `manifest_hash`.
    pub fn write_json(&mut self, dir: &Path, name: &str, mut value: Value) -> Result<PathBuf> {
        if let Some(obj) = value.as_object_mut() {
            obj.insert("manifest_hash".into(), json!(self.hash));
        }
        let text = serde_json::to_string_pretty(&value)? + "\n";
        self.write_raw(dir, name, text.as_bytes())
    }

    pub fn write_raw(&mut self, dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(name);
        std::fs::write(&path, bytes)?;
        self.outputs.push(OutputRecord { path: name.into(), sha256: digest(bytes) });
        Ok(path)
    }

    pub fn finish(mut self, dir: &Path) -> Result<PathBuf> {
        self.wall_time = self.started.map_or(0.0, |s| s.elapsed().as_secs_f64());
        std::fs::create_dir_all(dir)?;
        let path = dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&self)? + "\n")?;
        Ok(path)
    }
}

/// Checks that every referenced output exists, matches its digest, and (for
/// JSON outputs) carries the manifest hash.
pub fn validate_manifest(path: &Path) -> Result<RunManifest> {
    let m: RunManifest = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    for out in &m.outputs {
        let bytes = std::fs::read(dir.join(&out.path))?;
        if digest(&bytes) != out.sha256 {
            return Err(NlcsError::Schema { path: out.path.clone(), msg: "digest mismatch".into() });
        }
        if out.path.ends_with(".json") {
            let v: Value = serde_json::from_slice(&bytes)?;
            if v.get("manifest_hash").and_then(Value::as_str) != Some(m.hash.as_str()) {
                return Err(NlcsError::Schema { path: out.path.clone(), msg: "missing or wrong manifest_hash".into() });
            }
        }
    }
    Ok(m)
}
