//! Versioned JSON checkpoints for trained models.
//!
//! Layout (self-describing, one JSON object per file):
//!
//! ```json
//! {
//!   "format": "roughline-checkpoint",
//!   "version": 1,
//!   "kind": "difficulty" | "quantile",
//!   "model": { ... }
//! }
//! ```
//!
//! The `model` payload is the serde serialization of the model struct and
//! carries layer sizes, the flat f64 parameter vector, the input
//! standardization constants, and the training seed. f64 values survive the
//! JSON round trip bit-exactly (shortest-repr float printing), so a loaded
//! model predicts identically to the saved one. Loading validates format,
//! version, and kind before touching the payload and reports which one was
//! wrong.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::difficulty::DifficultyModel;
use super::quantile::QuantileNet;
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "roughline-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

const KIND_DIFFICULTY: &str = "difficulty";
const KIND_QUANTILE: &str = "quantile";

#[derive(Serialize)]
struct EnvelopeOut<'a, T> {
    format: &'static str,
    version: u32,
    kind: &'static str,
    model: &'a T,
}

#[derive(Deserialize)]
struct EnvelopeIn {
    format: String,
    version: u32,
    kind: String,
    model: serde_json::Value,
}

pub fn save_difficulty_model(path: &Path, model: &DifficultyModel) -> Result<()> {
    save(path, KIND_DIFFICULTY, model)
}

pub fn load_difficulty_model(path: &Path) -> Result<DifficultyModel> {
    load(path, KIND_DIFFICULTY)
}

pub fn save_quantile_net(path: &Path, net: &QuantileNet) -> Result<()> {
    save(path, KIND_QUANTILE, net)
}

pub fn load_quantile_net(path: &Path) -> Result<QuantileNet> {
    load(path, KIND_QUANTILE)
}

fn save<T: Serialize>(path: &Path, kind: &'static str, model: &T) -> Result<()> {
    let envelope = EnvelopeOut { format: CHECKPOINT_FORMAT, version: CHECKPOINT_VERSION, kind, model };
    let text = serde_json::to_string_pretty(&envelope)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn load<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let envelope: EnvelopeIn = serde_json::from_str(&text)
        .map_err(|e| Error::format(path, format!("not a model checkpoint: {e}")))?;
    if envelope.format != CHECKPOINT_FORMAT {
        return Err(Error::format(
            path,
            format!("format tag {:?}, expected {CHECKPOINT_FORMAT:?}", envelope.format),
        ));
    }
    if envelope.version != CHECKPOINT_VERSION {
        return Err(Error::format(
            path,
            format!("checkpoint version {}, this build reads {CHECKPOINT_VERSION}", envelope.version),
        ));
    }
    if envelope.kind != kind {
        return Err(Error::format(
            path,
            format!("checkpoint holds a {:?} model, expected {kind:?}", envelope.kind),
        ));
    }
    serde_json::from_value(envelope.model)
        .map_err(|e| Error::format(path, format!("corrupt {kind} payload: {e}")))
}
