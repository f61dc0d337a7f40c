//! Atomic file output, checksums, JSON helpers and the model archive format.

use std::fs;
use std::io::Write;
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tabml_core::models::{FittedParams, Hyperparameters, SPACE_VERSION};
use tabml_core::{Algorithm, TrainedModel};

use crate::error::{Error, Result};

pub const MODEL_SCHEMA_VERSION: u32 = 1;
pub const MODEL_FORMAT: &str = "tabml-model";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path).map_err(|e| Error::io(path, e))?))
}

/// Writes through a temporary file in the target directory and renames it
/// into place. Returns the SHA-256 of the content.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<String> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(sha256_hex(bytes))
}

pub fn to_json_bytes<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("artifact types serialize");
    v.push(b'\n');
    v
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<String> {
    write_atomic(path, &to_json_bytes(value))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|source| Error::Json { path: path.to_path_buf(), source })
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Versioned envelope around a trained model. The fitted parameters travel
/// as base64-encoded JSON so the envelope stays readable without them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArchive {
    pub format: String,
    pub schema_version: u32,
    pub space_version: u32,
    pub algorithm_id: String,
    pub dataset: String,
    pub fold: usize,
    pub train_seed: u64,
    pub hyperparameters: Hyperparameters,
    pub feature_subset: Vec<String>,
    /// Transform recipe of the fold, relative to the dataset directory.
    pub recipe: String,
    pub parameters: String,
}

impl ModelArchive {
    pub fn new(model: &TrainedModel, dataset: &str, recipe: &str) -> Self {
        let params = serde_json::to_vec(&model.params).expect("fitted parameters serialize");
        ModelArchive {
            format: MODEL_FORMAT.into(),
            schema_version: MODEL_SCHEMA_VERSION,
            space_version: SPACE_VERSION,
            algorithm_id: model.algorithm.id().into(),
            dataset: dataset.into(),
            fold: model.fold,
            train_seed: model.train_seed,
            hyperparameters: model.hyperparameters.clone(),
            feature_subset: model.feature_subset.clone(),
            recipe: recipe.into(),
            parameters: STANDARD.encode(params),
        }
    }

    pub fn to_model(&self) -> Result<TrainedModel> {
        if self.format != MODEL_FORMAT || self.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::Artifact(format!(
                "unsupported model archive `{}` version {} (expected `{MODEL_FORMAT}` version {MODEL_SCHEMA_VERSION})",
                self.format, self.schema_version
            )));
        }
        let algorithm = Algorithm::parse(&self.algorithm_id)
            .ok_or_else(|| Error::Artifact(format!("unknown algorithm id `{}`", self.algorithm_id)))?;
        let raw = STANDARD
            .decode(&self.parameters)
            .map_err(|e| Error::Artifact(format!("model parameters are not valid base64: {e}")))?;
        let params: FittedParams = serde_json::from_slice(&raw)
            .map_err(|e| Error::Artifact(format!("model parameters do not decode: {e}")))?;
        Ok(TrainedModel {
            algorithm,
            hyperparameters: self.hyperparameters.clone(),
            params,
            feature_subset: self.feature_subset.clone(),
            fold: self.fold,
            train_seed: self.train_seed,
        })
    }
}
