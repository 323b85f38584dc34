//! Versioned JSON model files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::likelihood::LikelihoodModel;
use crate::ratio::RatioModel;
use crate::sample::Standardizer;
use crate::simulators::ParamBox;

pub const FORMAT_TAG: &str = "spectral-series-model";
pub const FORMAT_VERSION: &str = "1.0";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// SHA-256 of the canonical run configuration.
    pub config_hash: String,
    pub seed: u64,
    pub library_version: String,
}

impl Provenance {
    pub fn new<C: Serialize>(config: &C, seed: u64) -> Result<Self> {
        Ok(Provenance {
            config_hash: config_hash(config)?,
            seed,
            library_version: env!("CARGO_PKG_VERSION").to_string(),
        })
    }
}

/// Hex SHA-256 of the JSON form of `config`.
pub fn config_hash<C: Serialize>(config: &C) -> Result<String> {
    let json = serde_json::to_string(config).map_err(|e| Error::Config(e.to_string()))?;
    Ok(hex::encode(Sha256::digest(json.as_bytes())))
}

#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelPayload {
    Ratio {
        model: RatioModel,
    },
    Likelihood {
        model: LikelihoodModel,
        /// Prior box the posterior grid is built on.
        param_box: ParamBox,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: String,
    pub provenance: Provenance,
    /// Applied to data inputs before evaluation, when present.
    pub standardizer: Option<Standardizer>,
    pub payload: ModelPayload,
}

impl ModelFile {
    pub fn new(
        payload: ModelPayload,
        provenance: Provenance,
        standardizer: Option<Standardizer>,
    ) -> Self {
        ModelFile {
            format: FORMAT_TAG.into(),
            version: FORMAT_VERSION.into(),
            provenance,
            standardizer,
            payload,
        }
    }

    pub fn ratio(&self) -> Option<&RatioModel> {
        match &self.payload {
            ModelPayload::Ratio { model } => Some(model),
            _ => None,
        }
    }

    pub fn likelihood(&self) -> Option<(&LikelihoodModel, &ParamBox)> {
        match &self.payload {
            ModelPayload::Likelihood { model, param_box } => Some((model, param_box)),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self)
            .map_err(|e| Error::Numerical(format!("cannot serialise model: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::CorruptModel(e.to_string()))?;
        let format = value.get("format").and_then(|v| v.as_str());
        if format != Some(FORMAT_TAG) {
            return Err(Error::CorruptModel(format!(
                "unrecognised format tag {format:?}"
            )));
        }
        let version = value
            .get("version")
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::CorruptModel("missing version".into()))?;
        check_version(version)?;
        let file: ModelFile =
            serde_json::from_value(value).map_err(|e| Error::CorruptModel(e.to_string()))?;
        let payload = match file.payload {
            ModelPayload::Ratio { model } => ModelPayload::Ratio {
                model: model.revalidate().map_err(corrupt)?,
            },
            ModelPayload::Likelihood { model, param_box } => {
                param_box.validate(false).map_err(corrupt)?;
                if param_box.dim() != model.theta_dim() {
                    return Err(Error::CorruptModel(
                        "parameter box does not match the model".into(),
                    ));
                }
                ModelPayload::Likelihood {
                    model: model.revalidate().map_err(corrupt)?,
                    param_box,
                }
            }
        };
        Ok(ModelFile { payload, ..file })
    }
}

fn corrupt(e: Error) -> Error {
    Error::CorruptModel(e.to_string())
}

fn major(version: &str) -> Result<u64> {
    version
        .split('.')
        .next()
        .and_then(|m| m.parse().ok())
        .ok_or_else(|| Error::CorruptModel(format!("malformed version '{version}'")))
}

fn check_version(found: &str) -> Result<()> {
    if major(found)? > major(FORMAT_VERSION)? {
        return Err(Error::UnsupportedVersion {
            found: found.into(),
            supported: FORMAT_VERSION.into(),
        });
    }
    Ok(())
}

pub fn save_model(path: &Path, file: &ModelFile) -> Result<()> {
    fs::write(path, file.to_json()?)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    let bytes = fs::read(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes).map_err(|e| Error::CorruptModel(e.to_string()))?;
    ModelFile::from_json(text)
}
