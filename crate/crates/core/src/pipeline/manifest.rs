//! Dataset manifest: one JSON document describing every generated example.
//!
//! The manifest is the dataset's source of truth — image files carry pixels
//! only, while dose, roughness parameters, labels, and seeds live here. The
//! document embeds its own SHA-256 (computed with the hash field blanked),
//! so corruption and accidental edits are detectable, and it is written
//! last, atomically: a dataset directory without a readable manifest is by
//! definition incomplete.
//!
//! Schema (JSON, field order fixed by the structs below):
//!
//! ```json
//! {
//!   "manifest_version": 1,
//!   "config": { ...DatasetConfig echo... },
//!   "examples": [ { ...ExampleRecord... }, ... ],
//!   "manifest_sha256": "hex"
//! }
//! ```
//!
//! All file paths are relative to the manifest's directory, with forward
//! slashes.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::DatasetConfig;
use crate::error::{Error, Result};

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

/// One noisy image and everything needed to use it: file paths, the dose,
/// the roughness parameters of its group, per-edge LER labels computed from
/// the continuous ground-truth edges, and the seed its noise was drawn
/// from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleRecord {
    /// "g00012-d03": group id plus dose index.
    pub example_id: String,
    /// "g00012": one original image; identical across all dose variants.
    pub group_id: String,
    pub group_index: u64,
    pub dose_index: usize,
    pub dose: f64,
    pub sigma: f64,
    pub hurst: f64,
    pub xi: f64,
    pub line_width_nm: f64,
    pub line_center_nm: f64,
    /// LER of the continuous left edge, nm (the left-edge label).
    pub left_ler_nm: f64,
    /// LER of the continuous right edge, nm (the right-edge label).
    pub right_ler_nm: f64,
    pub clean_path: String,
    pub noisy_path: String,
    pub denoised_path: String,
    pub noise_path: String,
    /// Seed the Poisson noise of this example was drawn from.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub manifest_version: u32,
    pub config: DatasetConfig,
    pub examples: Vec<ExampleRecord>,
    /// SHA-256 (hex) of this document serialized with this field empty.
    pub manifest_sha256: String,
}

impl DatasetManifest {
    /// Assembles a manifest and stamps its content hash.
    pub fn new(config: DatasetConfig, examples: Vec<ExampleRecord>) -> Self {
        let mut manifest =
            Self { manifest_version: MANIFEST_VERSION, config, examples, manifest_sha256: String::new() };
        manifest.manifest_sha256 = manifest.content_hash();
        manifest
    }

    /// SHA-256 hex of the manifest serialized with the hash field blanked.
    pub fn content_hash(&self) -> String {
        let mut unhashed = self.clone();
        unhashed.manifest_sha256 = String::new();
        let text = serde_json::to_string_pretty(&unhashed).expect("manifest serialization");
        hex(&Sha256::digest(text.as_bytes()))
    }

    pub fn group_count(&self) -> usize {
        let mut ids: Vec<u64> = self.examples.iter().map(|e| e.group_index).collect();
        ids.dedup(); // examples are grouped contiguously
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes the manifest atomically: serialize to `manifest.json.tmp` in the
/// same directory, then rename over the final name.
pub fn write_manifest(dir: &Path, manifest: &DatasetManifest) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest)?;
    let final_path = dir.join(MANIFEST_FILE);
    let tmp_path = dir.join(format!("{MANIFEST_FILE}.tmp"));
    std::fs::write(&tmp_path, &text).map_err(|e| Error::io(&tmp_path, e))?;
    std::fs::rename(&tmp_path, &final_path).map_err(|e| Error::io(&final_path, e))?;
    Ok(())
}

/// Loads and fully validates a manifest: version, embedded content hash,
/// and existence of every referenced image file.
pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: DatasetManifest = serde_json::from_str(&text)
        .map_err(|e| Error::format(path, format!("not a dataset manifest: {e}")))?;
    if manifest.manifest_version != MANIFEST_VERSION {
        return Err(Error::format(
            path,
            format!("manifest version {}, this build reads {MANIFEST_VERSION}", manifest.manifest_version),
        ));
    }
    let expected = manifest.content_hash();
    if manifest.manifest_sha256 != expected {
        return Err(Error::format(
            path,
            format!("content hash mismatch: stored {}, computed {expected}", manifest.manifest_sha256),
        ));
    }
    let root = path.parent().unwrap_or_else(|| Path::new("."));
    for example in &manifest.examples {
        for rel in [&example.clean_path, &example.noisy_path, &example.denoised_path, &example.noise_path] {
            let file = root.join(rel);
            if !file.is_file() {
                return Err(Error::format(
                    path,
                    format!("referenced image missing: {} (example {})", file.display(), example.example_id),
                ));
            }
        }
    }
    Ok(manifest)
}
