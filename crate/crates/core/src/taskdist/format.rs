//! `MCC1` dataset container.
//!
//! ```text
//! offset 0      4 bytes   ASCII "MCC1"
//! offset 4      4 bytes   u32 LE: header length H
//! offset 8      H bytes   UTF-8 JSON header
//! offset 8+H    payload   sections located by the header's byte offsets,
//!                         measured from the start of the payload
//! ```
//!
//! Sections:
//! * `signals`: little-endian `f32`, `[setup][message][example][symbol]`.
//! * `messages`: `ceil(K/8)` bytes per message, `[setup][message]`, bit `i`
//!   of the message stored in byte `i / 8` at bit position `i % 8`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BenchmarkDataset, DatasetCounts, Role};
use crate::channel::ChannelSpec;
use crate::codec::MessageBits;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"MCC1";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub offset: u64,
    pub length: u64,
    pub encoding: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sections {
    pub signals: Section,
    pub messages: Section,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub magic: String,
    pub version: u32,
    pub role: Role,
    pub k: usize,
    pub counts: DatasetCounts,
    pub seed: u64,
    pub setups: Vec<ChannelSpec>,
    pub sections: Sections,
}

fn bytes_per_message(k: usize) -> usize {
    k.div_ceil(8)
}

fn pack(msg: &MessageBits, out: &mut Vec<u8>) {
    let mut bytes = vec![0u8; bytes_per_message(msg.len())];
    for (i, &b) in msg.bits().iter().enumerate() {
        bytes[i / 8] |= b << (i % 8);
    }
    out.extend(bytes);
}

fn unpack(bytes: &[u8], k: usize) -> Result<MessageBits> {
    MessageBits::new((0..k).map(|i| (bytes[i / 8] >> (i % 8)) & 1).collect())
}

/// Serialize a dataset to bytes.
pub fn encode(ds: &BenchmarkDataset) -> Result<Vec<u8>> {
    let signal_bytes = ds.signals.len() * 4;
    let message_bytes = ds.messages.len() * bytes_per_message(ds.k);
    let header = DatasetHeader {
        magic: String::from_utf8_lossy(MAGIC).into_owned(),
        version: FORMAT_VERSION,
        role: ds.role,
        k: ds.k,
        counts: ds.counts,
        seed: ds.seed,
        setups: ds.setups.clone(),
        sections: Sections {
            signals: Section { offset: 0, length: signal_bytes as u64, encoding: "f32le".into() },
            messages: Section {
                offset: signal_bytes as u64,
                length: message_bytes as u64,
                encoding: "packed-bits-lsb0".into(),
            },
        },
    };
    let json = serde_json::to_vec(&header)?;
    let mut out = Vec::with_capacity(8 + json.len() + signal_bytes + message_bytes);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for v in &ds.signals {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for m in &ds.messages {
        pack(m, &mut out);
    }
    Ok(out)
}

/// Parse the header only.
pub fn read_header(bytes: &[u8]) -> Result<(DatasetHeader, usize)> {
    if bytes.len() < 8 || &bytes[..4] != MAGIC {
        return Err(Error::Format("missing MCC1 magic".into()));
    }
    let h = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    let body = bytes.get(8..8 + h).ok_or_else(|| Error::Format("truncated header".into()))?;
    let header: DatasetHeader = serde_json::from_slice(body)?;
    if header.magic.as_bytes() != MAGIC {
        return Err(Error::Format(format!("header magic `{}`", header.magic)));
    }
    if header.version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported format version {}", header.version)));
    }
    Ok((header, 8 + h))
}

/// Deserialize a dataset from bytes.
pub fn decode(bytes: &[u8]) -> Result<BenchmarkDataset> {
    let (header, payload_start) = read_header(bytes)?;
    let payload = &bytes[payload_start..];
    let section = |s: &Section| -> Result<&[u8]> {
        let (a, b) = (s.offset as usize, (s.offset + s.length) as usize);
        payload.get(a..b).ok_or_else(|| Error::Format("section extends past end of file".into()))
    };
    let signals: Vec<f32> = section(&header.sections.signals)?
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    let per = bytes_per_message(header.k);
    let messages = section(&header.sections.messages)?
        .chunks_exact(per)
        .map(|c| unpack(c, header.k))
        .collect::<Result<Vec<_>>>()?;
    BenchmarkDataset::from_parts(header.role, header.k, header.seed, header.counts, header.setups, messages, signals)
}

pub fn write_dataset(ds: &BenchmarkDataset, path: &Path) -> Result<()> {
    let bytes = encode(ds)?;
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<BenchmarkDataset> {
    decode(&fs::read(path)?)
}
