use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::autograd::{ParamStore, Tensor};
use crate::error::{CheckpointError, Error, Result};
use crate::mil::config::ModelConfig;
use crate::mil::model::MilModel;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"HXNC";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub seed: u64,
    pub epoch: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    /// element offset into the f32 payload
    offset: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    meta: CheckpointMeta,
    tensors: Vec<TensorEntry>,
}

/// Layout: magic "HXNC", u32 LE version, u64 LE header length, JSON header
/// (config, metadata, tensor table), then the raw little-endian f32 payload
/// in table order.
pub fn save_checkpoint(model: &MilModel<f32>, meta: CheckpointMeta, path: &Path) -> Result<()> {
    let mut tensors = Vec::with_capacity(model.params.len());
    let mut offset = 0u64;
    for (name, t) in model.params.iter() {
        tensors.push(TensorEntry {
            name: name.to_string(),
            shape: t.shape().to_vec(),
            offset,
        });
        offset += t.len() as u64;
    }
    let header = Header {
        config: model.config.clone(),
        meta,
        tensors,
    };
    let header_json = serde_json::to_vec(&header)
        .map_err(|e| Error::Checkpoint(CheckpointError::HeaderJson(e.to_string())))?;

    let mut bytes = Vec::with_capacity(16 + header_json.len() + offset as usize * 4);
    bytes.extend_from_slice(&CHECKPOINT_MAGIC);
    bytes.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    bytes.extend_from_slice(&(header_json.len() as u64).to_le_bytes());
    bytes.extend_from_slice(&header_json);
    for (_, t) in model.params.iter() {
        for &v in t.data() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<(MilModel<f32>, CheckpointMeta)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    load_checkpoint_bytes(&bytes)
}

pub fn load_checkpoint_bytes(bytes: &[u8]) -> Result<(MilModel<f32>, CheckpointMeta)> {
    if bytes.len() < 16 {
        return Err(CheckpointError::TruncatedHeader {
            declared: 16,
            available: bytes.len() as u64,
        }
        .into());
    }
    if bytes[0..4] != CHECKPOINT_MAGIC {
        return Err(CheckpointError::BadMagic.into());
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(CheckpointError::BadVersion(version).into());
    }
    let header_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let header_end = 16u64.saturating_add(header_len);
    if header_end > bytes.len() as u64 {
        return Err(CheckpointError::TruncatedHeader {
            declared: header_len,
            available: bytes.len() as u64 - 16,
        }
        .into());
    }
    let header: Header = serde_json::from_slice(&bytes[16..header_end as usize])
        .map_err(|e| Error::from(CheckpointError::HeaderJson(e.to_string())))?;

    // table consistency: offsets must tile the payload contiguously
    let mut expected_offset = 0u64;
    let mut seen = std::collections::HashSet::new();
    for entry in &header.tensors {
        if !seen.insert(entry.name.clone()) {
            return Err(CheckpointError::TableMismatch(format!(
                "duplicate tensor `{}`",
                entry.name
            ))
            .into());
        }
        if entry.offset != expected_offset {
            return Err(CheckpointError::TableMismatch(format!(
                "tensor `{}` at offset {}, expected {expected_offset}",
                entry.name, entry.offset
            ))
            .into());
        }
        expected_offset += entry.shape.iter().product::<usize>() as u64;
    }
    let payload = &bytes[header_end as usize..];
    let available = (payload.len() / 4) as u64;
    if available != expected_offset || !payload.len().is_multiple_of(4) {
        return Err(CheckpointError::TruncatedPayload {
            needed: expected_offset,
            available,
        }
        .into());
    }

    let mut params = ParamStore::new();
    for entry in &header.tensors {
        let n: usize = entry.shape.iter().product();
        let start = entry.offset as usize * 4;
        let data: Vec<f32> = payload[start..start + n * 4]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        let tensor = Tensor::from_vec(&entry.shape, data)
            .map_err(|e| Error::from(CheckpointError::TableMismatch(e.to_string())))?;
        params
            .insert(&entry.name, tensor)
            .map_err(|e| Error::from(CheckpointError::TableMismatch(e.to_string())))?;
    }
    let model = MilModel::from_parts(header.config, params)
        .map_err(|e| Error::from(CheckpointError::TableMismatch(e.to_string())))?;
    Ok((model, header.meta))
}
