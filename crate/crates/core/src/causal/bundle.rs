//! Versioned JSON persistence for trained models.
//!
//! A bundle is `{"format": "randep-model", "version": N, "kind": ..., "model": ...}`.
//! Featurizers are stored by their spec (block size, bandwidths, seed) and
//! rebuilt on load; classifiers are stored in full. Bundles whose version
//! differs from [`BUNDLE_VERSION`] are refused before the model is decoded.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::rcc::RccModel;
use super::trivariate::TrivariateModel;
use crate::error::{Error, Result};

pub const BUNDLE_FORMAT: &str = "randep-model";
pub const BUNDLE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model", rename_all = "snake_case")]
pub enum ModelBundle {
    Pair(RccModel),
    Trivariate(TrivariateModel),
}

#[derive(Serialize)]
struct Envelope<'a> {
    format: &'a str,
    version: u32,
    #[serde(flatten)]
    bundle: &'a ModelBundle,
}

impl ModelBundle {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&Envelope { format: BUNDLE_FORMAT, version: BUNDLE_VERSION, bundle: self })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut value: Value = serde_json::from_str(text)?;
        let obj = value.as_object_mut().ok_or_else(|| Error::InvalidData("model bundle is not a JSON object".into()))?;
        match obj.remove("format") {
            Some(Value::String(f)) if f == BUNDLE_FORMAT => {}
            _ => return Err(Error::InvalidData(format!("not a {BUNDLE_FORMAT} bundle"))),
        }
        let found = obj
            .remove("version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::InvalidData("model bundle has no version".into()))?;
        if found != u64::from(BUNDLE_VERSION) {
            return Err(Error::Version { expected: BUNDLE_VERSION, found: u32::try_from(found).unwrap_or(u32::MAX) });
        }
        Ok(serde_json::from_value(value)?)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ModelBundle::Pair(_) => "pair",
            ModelBundle::Trivariate(_) => "trivariate",
        }
    }
}

pub fn save_bundle(bundle: &ModelBundle, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, bundle.to_json()?)?;
    Ok(())
}

pub fn load_bundle(path: impl AsRef<Path>) -> Result<ModelBundle> {
    ModelBundle::from_json(&std::fs::read_to_string(path)?)
}
