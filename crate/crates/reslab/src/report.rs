//! Report envelopes: every JSON report embeds the toolkit version and the
//! hash of the config that produced it, and a per-directory summary.json
//! aggregates stage verdicts for cross-consistency checking.

use crate::error::{Error, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Hex SHA-256 of the canonical (struct-ordered) JSON form of a config.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let bytes = serde_json::to_vec(config)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Debug, Serialize)]
struct Envelope<'a, T: Serialize> {
    version: &'static str,
    command: &'a str,
    config_hash: &'a str,
    body: &'a T,
}

pub fn write_report<T: Serialize>(
    out_dir: &Path,
    file_name: &str,
    command: &str,
    config_hash: &str,
    body: &T,
) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let env = Envelope {
        version: VERSION,
        command,
        config_hash,
        body,
    };
    let text = serde_json::to_string_pretty(&env)?;
    std::fs::write(out_dir.join(file_name), text + "\n")?;
    Ok(())
}

/// Aggregated stage outcomes for one output directory. String-keyed maps
/// keep the serialisation order stable.
#[derive(Debug, Default, Clone, serde::Serialize, serde::Deserialize)]
pub struct Summary {
    #[serde(default)]
    pub stages: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    pub config_hashes: BTreeMap<String, String>,
    #[serde(default)]
    pub conflicts: Vec<String>,
    #[serde(default)]
    pub consistent: bool,
}

impl Summary {
    pub fn load(out_dir: &Path) -> Summary {
        std::fs::read_to_string(out_dir.join("summary.json"))
            .ok()
            .and_then(|t| serde_json::from_str(&t).ok())
            .unwrap_or_default()
    }

    pub fn record(
        &mut self,
        stage: &str,
        hash: &str,
        value: serde_json::Value,
    ) {
        self.stages.insert(stage.to_string(), value);
        self.config_hashes.insert(stage.to_string(), hash.to_string());
    }

    /// Cross-stage consistency rules; returns the conflicts found.
    pub fn check_consistency(&mut self) -> Vec<String> {
        let mut conflicts = Vec::new();
        let get = |m: &BTreeMap<String, serde_json::Value>, k: &str, f: &str| -> Option<serde_json::Value> {
            m.get(k).and_then(|v| v.get(f)).cloned()
        };
        let certified = get(&self.stages, "certify", "verdict")
            .and_then(|v| v.as_str().map(|s| s == "certified"))
            .unwrap_or(false);
        let classify_kind = get(&self.stages, "classify", "kind")
            .and_then(|v| v.as_str().map(String::from));
        if certified {
            if let Some(kind) = &classify_kind {
                if kind == "strong_resonance" {
                    conflicts.push(
                        "certificate is certified but the classifier reports a strong resonance"
                            .into(),
                    );
                }
            }
            if let Some(n) = get(&self.stages, "scan", "near_origin_zeros").and_then(|v| v.as_u64())
            {
                if n > 0 {
                    conflicts.push(format!(
                        "certificate is certified but the determinant scan found {n} zero(s) near the origin"
                    ));
                }
            }
        }
        if let (Some(true), Some(kind)) = (
            get(&self.stages, "weakres", "converged").and_then(|v| v.as_bool()),
            &classify_kind,
        ) {
            if kind == "strong_resonance" {
                conflicts.push(
                    "contraction converged (generic growing solution) but the classifier reports a strong resonance"
                        .into(),
                );
            }
        }
        self.conflicts = conflicts.clone();
        self.consistent = conflicts.is_empty();
        conflicts
    }

    pub fn save(&self, out_dir: &Path) -> Result<()> {
        std::fs::create_dir_all(out_dir)?;
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(out_dir.join("summary.json"), text + "\n")?;
        Ok(())
    }
}

/// Columns to CSV with a header row.
pub fn write_csv(path: &Path, header: &str, rows: impl Iterator<Item = String>) -> Result<()> {
    use std::io::Write;
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{header}")?;
    for row in rows {
        writeln!(f, "{row}")?;
    }
    Ok(())
}

pub fn read_json_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}
