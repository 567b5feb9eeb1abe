//! Binary model checkpoints.
//!
//! Layout: the magic bytes, a little-endian `u32` version, a `u64` header
//! length, a JSON header describing the model and its tensors, then every
//! tensor as little-endian `f64` values in header order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::codec::EncodingScheme;
use crate::error::{Error, Result};

use super::hyper::Hyperparams;
use super::params::{Dims, ModelParams};
use super::train::Model;
use super::vocab::Vocabulary;

const MAGIC: &[u8; 8] = b"SGPARSER";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct TensorInfo {
    name: String,
    shape: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    hyper: Hyperparams,
    scheme: EncodingScheme,
    vocab: Vocabulary,
    dims: Dims,
    word_frozen: bool,
    tensors: Vec<TensorInfo>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

pub fn model_to_bytes(model: &Model) -> Result<Vec<u8>> {
    let tensors = model.params.tensors();
    let header = Header {
        hyper: model.hyper.clone(),
        scheme: model.scheme.clone(),
        vocab: model.vocab.clone(),
        dims: model.params.dims.clone(),
        word_frozen: model.params.word_frozen,
        tensors: tensors
            .iter()
            .map(|(name, shape, _)| TensorInfo {
                name: name.clone(),
                shape: shape.clone(),
            })
            .collect(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| bad(e.to_string()))?;
    let values: usize = tensors.iter().map(|(_, _, d)| d.len()).sum();
    let mut out = Vec::with_capacity(MAGIC.len() + 12 + json.len() + 8 * values);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for (_, _, data) in &tensors {
        for v in data.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<Model> {
    let rest = bytes
        .strip_prefix(MAGIC.as_slice())
        .ok_or_else(|| bad("not a parser checkpoint"))?;
    if rest.len() < 12 {
        return Err(bad("truncated header"));
    }
    let version = u32::from_le_bytes(rest[..4].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(bad(format!("unsupported checkpoint version {}", version)));
    }
    let len = u64::from_le_bytes(rest[4..12].try_into().expect("8 bytes")) as usize;
    let rest = &rest[12..];
    if rest.len() < len {
        return Err(bad("truncated header"));
    }
    let header: Header = serde_json::from_slice(&rest[..len]).map_err(|e| bad(e.to_string()))?;
    let mut payload = &rest[len..];
    let mut tensors = Vec::with_capacity(header.tensors.len());
    for info in header.tensors {
        let count: usize = info.shape.iter().product();
        if payload.len() < 8 * count {
            return Err(bad(format!("truncated data for tensor '{}'", info.name)));
        }
        let data = payload[..8 * count]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        payload = &payload[8 * count..];
        tensors.push((info.name, info.shape, data));
    }
    if !payload.is_empty() {
        return Err(bad(format!("{} trailing bytes", payload.len())));
    }
    if header.dims.labels != header.vocab.num_labels() {
        return Err(bad("label count does not match the vocabulary"));
    }
    let params = ModelParams::from_tensors(header.dims, header.word_frozen, tensors)?;
    Ok(Model {
        vocab: header.vocab,
        hyper: header.hyper,
        scheme: header.scheme,
        params,
    })
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model_to_bytes(model)?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    model_from_bytes(&bytes)
}
