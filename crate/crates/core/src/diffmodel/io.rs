use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::spec::{ModelParams, ModelSpec};
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "uapforge-model";
pub const MODEL_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format: String,
    version: u64,
    spec: Value,
    arrays: Map<String, Value>,
}

/// Serializes parameters to the JSON model document.
pub fn model_to_json(params: &ModelParams) -> Result<String> {
    let arrays = params
        .named()
        .into_iter()
        .map(|(name, values)| (name.to_string(), Value::from(values.to_vec())))
        .collect();
    let doc = ModelDocument {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        spec: serde_json::to_value(params.spec()).expect("spec serializes"),
        arrays,
    };
    serde_json::to_string_pretty(&doc).map_err(|e| Error::format("model", e.to_string()))
}

pub fn model_from_json(text: &str) -> Result<ModelParams> {
    let doc: ModelDocument =
        serde_json::from_str(text).map_err(|e| Error::format("model", e.to_string()))?;
    if doc.format != MODEL_FORMAT {
        return Err(Error::format("model", format!("unexpected format tag `{}`", doc.format)));
    }
    if doc.version != MODEL_VERSION {
        return Err(Error::format("model", format!("unsupported version {}", doc.version)));
    }
    let spec: ModelSpec =
        serde_json::from_value(doc.spec).map_err(|e| Error::format("model spec", e.to_string()))?;
    let mut named = Vec::with_capacity(doc.arrays.len());
    for (name, value) in doc.arrays {
        let values: Vec<f64> = serde_json::from_value(value)
            .map_err(|e| Error::format(format!("model array `{name}`"), e.to_string()))?;
        named.push((name, values));
    }
    ModelParams::from_named(&spec, named)
}

pub fn save_model(params: &ModelParams, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model_to_json(params)?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelParams> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_json(&text)
}
