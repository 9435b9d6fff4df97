use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::Command;

/// First 16 hex digits of SHA-256 over the canonical run configuration and
/// the model file bytes. Output directory and thread count are not part of
/// the configuration.
pub fn config_hash(command: &Command, seed: u64, model_bytes: &[u8]) -> String {
    let config = json!({ "command": command.name(), "params": command, "seed": seed });
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(&config).expect("configuration serializes"));
    h.update([0u8]);
    h.update(model_bytes);
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

pub struct Emitted {
    pub json: PathBuf,
    pub csv: Option<PathBuf>,
}

/// Writes `{stem}.json` and, when given, `{stem}.csv` into `out_dir`.
pub fn emit(out_dir: &Path, stem: &str, report: &Value, csv: Option<&str>) -> Result<Emitted> {
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let json = out_dir.join(format!("{stem}.json"));
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    fs::write(&json, text).with_context(|| format!("writing {}", json.display()))?;
    let csv = match csv {
        Some(body) => {
            let p = out_dir.join(format!("{stem}.csv"));
            fs::write(&p, body).with_context(|| format!("writing {}", p.display()))?;
            Some(p)
        }
        None => None,
    };
    Ok(Emitted { json, csv })
}
