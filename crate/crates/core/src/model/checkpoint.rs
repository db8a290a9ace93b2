//! Checkpoint container.
//!
//! ```text
//! magic          "SWMCKPT\0"   8 bytes
//! version        u32 LE
//! header length  u64 LE
//! header         UTF-8 JSON: format_version, arch, seed, tensor list
//! tensors        f64 LE, in header order, each rows × cols values
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ArchDescriptor, ModelBundle};
use crate::error::{Error, Result};
use crate::nn::{DenseLayer, Matrix};

pub const CHECKPOINT_MAGIC: [u8; 8] = *b"SWMCKPT\0";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    arch: ArchDescriptor,
    seed: Option<u64>,
    tensors: Vec<TensorInfo>,
}

#[derive(Debug, PartialEq, Serialize, Deserialize)]
struct TensorInfo {
    name: String,
    rows: usize,
    cols: usize,
}

fn tensor_list(arch: &ArchDescriptor) -> Vec<TensorInfo> {
    let mut out = Vec::new();
    for (part, shapes) in [
        ("encoder", arch.encoder_shapes()),
        ("projector", arch.projector_shapes()),
        ("classifier", arch.classifier_shapes()),
    ] {
        for (l, (i, o)) in shapes.into_iter().enumerate() {
            out.push(TensorInfo {
                name: format!("{part}.{l}.weight"),
                rows: i,
                cols: o,
            });
            out.push(TensorInfo {
                name: format!("{part}.{l}.bias"),
                rows: 1,
                cols: o,
            });
        }
    }
    out
}

pub fn encode_checkpoint(bundle: &ModelBundle) -> Result<Vec<u8>> {
    bundle.validate()?;
    let header = Header {
        format_version: CHECKPOINT_VERSION,
        arch: bundle.arch.clone(),
        seed: bundle.seed,
        tensors: tensor_list(&bundle.arch),
    };
    let json = serde_json::to_vec(&header)?;
    let mut out = Vec::new();
    out.extend_from_slice(&CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for layers in [&bundle.encoder, &bundle.projector, &bundle.classifier] {
        out.extend_from_slice(&super::layer_bytes(layers));
    }
    Ok(out)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<ModelBundle> {
    let truncated = || Error::Checkpoint("truncated file".into());
    if bytes.len() < 20 {
        return Err(truncated());
    }
    if bytes[..8] != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("not a checkpoint file".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(Error::CheckpointVersion {
            expected: CHECKPOINT_VERSION,
            found: version,
        });
    }
    let header_len = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let header_end = usize::try_from(header_len)
        .ok()
        .and_then(|l| l.checked_add(20))
        .filter(|&e| e <= bytes.len())
        .ok_or_else(truncated)?;
    let header: Header = serde_json::from_slice(&bytes[20..header_end])
        .map_err(|e| Error::Checkpoint(format!("header: {e}")))?;
    if header.format_version != CHECKPOINT_VERSION {
        return Err(Error::CheckpointVersion {
            expected: CHECKPOINT_VERSION,
            found: header.format_version,
        });
    }
    header.arch.validate()?;
    let expected = tensor_list(&header.arch);
    if header.tensors != expected {
        return Err(Error::Checkpoint(
            "tensor shapes inconsistent with the architecture".into(),
        ));
    }

    let mut pos = header_end;
    let mut take = |rows: usize, cols: usize| -> Result<Vec<f64>> {
        let len = rows * cols * 8;
        let chunk = bytes.get(pos..pos + len).ok_or_else(truncated)?;
        pos += len;
        Ok(chunk
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    };
    let mut read_layers = |shapes: Vec<(usize, usize)>| -> Result<Vec<DenseLayer>> {
        shapes
            .into_iter()
            .map(|(i, o)| {
                let w = Matrix::from_vec(i, o, take(i, o)?)?;
                DenseLayer::new(w, take(1, o)?)
            })
            .collect()
    };
    let encoder = read_layers(header.arch.encoder_shapes())?;
    let projector = read_layers(header.arch.projector_shapes())?;
    let classifier = read_layers(header.arch.classifier_shapes())?;
    if pos != bytes.len() {
        return Err(Error::Checkpoint(format!(
            "{} trailing bytes",
            bytes.len() - pos
        )));
    }
    let bundle = ModelBundle {
        arch: header.arch,
        encoder,
        projector,
        classifier,
        seed: header.seed,
    };
    if [&bundle.encoder, &bundle.projector, &bundle.classifier]
        .iter()
        .flat_map(|ls| ls.iter())
        .any(|l| !l.weights.is_finite() || l.bias.iter().any(|b| !b.is_finite()))
    {
        return Err(Error::Checkpoint("non-finite parameter".into()));
    }
    Ok(bundle)
}

pub fn save_checkpoint(bundle: &ModelBundle, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_checkpoint(bundle)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ModelBundle> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}
