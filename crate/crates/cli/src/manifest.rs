//! Run manifest: resolved config, seed, artifact version, and input
//! digests. Two runs with identical manifests produce identical outputs,
//! so nothing time- or host-dependent goes in here.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use vscreen_core::Result;

use crate::config::Resolved;

#[derive(Debug, Serialize)]
struct InputDigest {
    path: PathBuf,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    artifact: String,
    command: &'a str,
    seed: u64,
    config: &'a Resolved,
    inputs: Vec<InputDigest>,
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Write `manifest.toml` into the output directory.
pub fn write_manifest(command: &str, config: &Resolved, inputs: &[&Path]) -> Result<()> {
    let mut digests = Vec::new();
    for path in inputs {
        digests.push(InputDigest {
            path: path.to_path_buf(),
            sha256: file_sha256(path)?,
        });
    }
    let manifest = Manifest {
        artifact: format!("vscreen {}", env!("CARGO_PKG_VERSION")),
        command,
        seed: config.seed,
        config,
        inputs: digests,
    };
    let mut text = String::new();
    let _ = writeln!(text, "# run manifest; identical manifests produce identical outputs");
    text.push_str(
        &toml::to_string(&manifest)
            .map_err(|e| vscreen_core::Error::Serialization(e.to_string()))?,
    );
    std::fs::write(config.out.join("manifest.toml"), text)?;
    Ok(())
}
