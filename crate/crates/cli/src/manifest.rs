//! Reproducibility manifests.
//!
//! Every command writes a `manifest.json` beside its outputs recording
//! the fully resolved configuration, the effective seed, and a SHA-256
//! digest of each input file. Re-running a command with the same
//! manifest ingredients reproduces the outputs byte-identically — except
//! `bench`, whose reports contain genuine wall-clock measurements (the
//! manifest then reproduces the measurement protocol, not the timings).

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use radflow::Result;

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    command: &'a str,
    /// Effective master seed, when the command consumes randomness.
    seed: Option<u64>,
    /// Fully resolved configuration after defaults, config file, and
    /// flag overrides.
    config: &'a C,
    /// SHA-256 digest per input file, keyed by the path as given.
    inputs: BTreeMap<String, String>,
    /// File names written next to this manifest.
    outputs: Vec<String>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    let digest = hasher.finalize();
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Writes `manifest.json` into `out_dir`.
pub fn write_manifest<C: Serialize>(
    out_dir: &Path,
    command: &str,
    seed: Option<u64>,
    config: &C,
    input_paths: &[&Path],
    outputs: &[&str],
) -> Result<()> {
    let mut inputs = BTreeMap::new();
    for path in input_paths {
        inputs.insert(path.display().to_string(), sha256_file(path)?);
    }
    let manifest = Manifest {
        command,
        seed,
        config,
        inputs,
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
    };
    let text =
        serde_json::to_string_pretty(&manifest).expect("manifest serialization cannot fail");
    std::fs::write(out_dir.join("manifest.json"), text + "\n")?;
    Ok(())
}
