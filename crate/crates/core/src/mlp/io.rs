//! Versioned JSON model files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::NormStats;
use crate::error::{Error, Result};
use crate::num::Real;

use super::{Dense, EpochLog, MlpConfig, MlpModel};

pub const FORMAT_VERSION: u32 = 1;
pub const MODEL_KIND: &str = "mlp";

#[derive(Serialize, Deserialize)]
#[serde(bound = "")]
struct ModelFile<T: Real> {
    format_version: u32,
    kind: String,
    config: MlpConfig<T>,
    norm: NormStats<T>,
    layers: Vec<Dense<T>>,
    training_log: Vec<EpochLog<T>>,
}

/// Reads `format_version` from a parsed document, mapping absence or a
/// different value to the matching error.
pub(crate) fn check_version(doc: &serde_json::Value, expected: u32) -> Result<()> {
    let found = doc
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::MalformedFile("missing format_version".into()))?;
    if found != u64::from(expected) {
        return Err(Error::VersionMismatch {
            found: u32::try_from(found).unwrap_or(u32::MAX),
            expected,
        });
    }
    Ok(())
}

pub(crate) fn parse_document(text: &str) -> Result<serde_json::Value> {
    serde_json::from_str(text).map_err(|e| Error::MalformedFile(e.to_string()))
}

impl<T: Real> MlpModel<T> {
    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format_version: FORMAT_VERSION,
            kind: MODEL_KIND.to_string(),
            config: self.config.clone(),
            norm: self.norm.clone(),
            layers: self.layers.clone(),
            training_log: self.training_log.clone(),
        };
        serde_json::to_string(&file).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc = parse_document(text)?;
        check_version(&doc, FORMAT_VERSION)?;
        let file: ModelFile<T> =
            serde_json::from_value(doc).map_err(|e| Error::MalformedFile(e.to_string()))?;
        if file.kind != MODEL_KIND {
            return Err(Error::MalformedFile(format!(
                "expected a '{MODEL_KIND}' model, found '{}'",
                file.kind
            )));
        }
        let model = MlpModel {
            config: file.config,
            layers: file.layers,
            norm: file.norm,
            training_log: file.training_log,
        };
        model
            .check_shapes()
            .map_err(|e| Error::MalformedFile(e.to_string()))?;
        Ok(model)
    }
}

pub fn save_model<T: Real>(model: &MlpModel<T>, path: &Path) -> Result<()> {
    fs::write(path, model.to_json())?;
    Ok(())
}

pub fn load_model<T: Real>(path: &Path) -> Result<MlpModel<T>> {
    MlpModel::from_json(&fs::read_to_string(path)?)
}
