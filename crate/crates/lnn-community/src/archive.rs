//! Versioned JSON persistence for trained models.
//!
//! JSON serialization uses shortest round-trip float formatting, so a
//! save/load cycle reproduces every weight bit-exactly.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::network::{LayerTopology, NetworkParams, NormInfo};

pub const FORMAT_VERSION: u32 = 1;

/// Where a model came from: the hash of the resolved config, the master seed,
/// and the library version that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub build: String,
}

impl Provenance {
    pub fn new(config_hash: impl Into<String>, seed: u64) -> Self {
        Provenance {
            config_hash: config_hash.into(),
            seed,
            build: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// On-disk model format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelArchive {
    pub format_version: u32,
    pub topology: Vec<usize>,
    /// One matrix per layer transition, as nested rows.
    pub weights: Vec<Vec<Vec<f64>>>,
    pub biases: Vec<Vec<f64>>,
    pub norm_info: Option<NormInfo>,
    pub provenance: Provenance,
}

impl ModelArchive {
    pub fn from_params(
        params: &NetworkParams,
        norm_info: Option<&NormInfo>,
        provenance: Provenance,
    ) -> Self {
        let depth = params.topology().depth();
        ModelArchive {
            format_version: FORMAT_VERSION,
            topology: params.topology().sizes().to_vec(),
            weights: (1..depth).map(|d| params.weights_from(d).to_rows()).collect(),
            biases: (1..depth).map(|d| params.biases_from(d).to_vec()).collect(),
            norm_info: norm_info.cloned(),
            provenance,
        }
    }

    /// Rebuilds the parameters, re-validating shape consistency.
    pub fn into_params(self) -> Result<(NetworkParams, Option<NormInfo>, Provenance)> {
        let topology = LayerTopology::new(self.topology)?;
        let weights: Vec<Matrix> = self.weights.iter().map(|m| Matrix::from_rows(m)).collect();
        let params = NetworkParams::new(topology, weights, self.biases)?;
        Ok((params, self.norm_info, self.provenance))
    }
}

pub fn save_model(
    params: &NetworkParams,
    norm_info: Option<&NormInfo>,
    provenance: Provenance,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let archive = ModelArchive::from_params(params, norm_info, provenance);
    let json = serde_json::to_string_pretty(&archive)
        .map_err(|e| Error::data(format!("failed to serialize model: {e}")))?;
    fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<(NetworkParams, Option<NormInfo>, Provenance)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    // Check the version before committing to the full schema, so a newer
    // format gets a clear error instead of a parse failure.
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::data(format!("{}: not valid model JSON: {e}", path.display())))?;
    match value.get("format_version").and_then(|v| v.as_u64()) {
        Some(v) if v == FORMAT_VERSION as u64 => {}
        Some(v) => {
            return Err(Error::data(format!(
                "{}: unsupported model format version {v} (this build reads {FORMAT_VERSION})",
                path.display()
            )))
        }
        None => {
            return Err(Error::data(format!(
                "{}: missing format_version field",
                path.display()
            )))
        }
    }
    let archive: ModelArchive = serde_json::from_value(value)
        .map_err(|e| Error::data(format!("{}: malformed model archive: {e}", path.display())))?;
    archive.into_params()
}
