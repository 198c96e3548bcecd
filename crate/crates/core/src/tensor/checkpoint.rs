//! `MCCP` parameter checkpoints.
//!
//! ```text
//! offset 0     4 bytes  ASCII "MCCP"
//! offset 4     4 bytes  u32 LE: header length H
//! offset 8     H bytes  UTF-8 JSON header
//! offset 8+H   payload  f64 LE values, tensors at the header's offsets
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Tensor;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"MCCP";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Byte offset into the payload.
    pub offset: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub magic: String,
    pub version: u32,
    #[serde(default)]
    pub metadata: serde_json::Value,
    pub tensors: Vec<TensorEntry>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub metadata: serde_json::Value,
    pub tensors: Vec<(String, Tensor)>,
}

impl Checkpoint {
    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }
}

pub fn encode(ck: &Checkpoint) -> Result<Vec<u8>> {
    let mut offset = 0u64;
    let tensors = ck
        .tensors
        .iter()
        .map(|(name, t)| {
            let e = TensorEntry { name: name.clone(), shape: t.shape().to_vec(), offset };
            offset += 8 * t.numel() as u64;
            e
        })
        .collect();
    let header = CheckpointHeader {
        magic: String::from_utf8_lossy(MAGIC).into_owned(),
        version: VERSION,
        metadata: ck.metadata.clone(),
        tensors,
    };
    let json = serde_json::to_vec(&header)?;
    let mut out = Vec::with_capacity(8 + json.len() + offset as usize);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for (_, t) in &ck.tensors {
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint> {
    if bytes.len() < 8 || &bytes[..4] != MAGIC {
        return Err(Error::Format("missing MCCP magic".into()));
    }
    let h = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    let body = bytes.get(8..8 + h).ok_or_else(|| Error::Format("truncated checkpoint header".into()))?;
    let header: CheckpointHeader = serde_json::from_slice(body)?;
    if header.version != VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {}", header.version)));
    }
    let payload = &bytes[8 + h..];
    let tensors = header
        .tensors
        .into_iter()
        .map(|e| {
            let n: usize = e.shape.iter().product();
            let a = e.offset as usize;
            let raw = payload
                .get(a..a + 8 * n)
                .ok_or_else(|| Error::Format(format!("tensor `{}` extends past end of file", e.name)))?;
            let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
            Ok((e.name, Tensor::new(e.shape, data)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Checkpoint { metadata: header.metadata, tensors })
}

pub fn save(ck: &Checkpoint, path: &Path) -> Result<()> {
    fs::write(path, encode(ck)?)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Checkpoint> {
    decode(&fs::read(path)?)
}
