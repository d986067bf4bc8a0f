//! Run manifests: enough recorded state to replay any command and get the
//! same artifacts back (wall-time columns excluded).

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use spectrain_core::Result;

use crate::Ctx;

#[derive(Debug, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Verbatim argv; replaying it reproduces every non-timing output.
    pub argv: Vec<String>,
    pub seed: u64,
    pub version: String,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
    pub created_unix: u64,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Digest the inputs, record the outputs, and write
/// `manifest-<command>.json` into the out dir.
pub fn write_manifest(
    command: &str,
    ctx: &Ctx,
    inputs: &[&Path],
    outputs: &[&Path],
) -> Result<PathBuf> {
    let mut digests = Vec::with_capacity(inputs.len());
    for p in inputs {
        digests.push(InputDigest {
            path: p.display().to_string(),
            sha256: sha256_file(p)?,
        });
    }
    let manifest = RunManifest {
        command: command.to_string(),
        argv: ctx.argv.clone(),
        seed: ctx.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        inputs: digests,
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    let path = ctx.out_dir.join(format!("manifest-{command}.json"));
    fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(path)
}
