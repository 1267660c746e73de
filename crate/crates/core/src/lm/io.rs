//! `LMD1` model files: magic, little-endian `u32` header length, JSON header,
//! then raw little-endian tensor data in manifest order.

use super::model::{LmModel, LmParams};
use super::{LmConfig, LmError};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

pub const LM_MAGIC: &[u8; 4] = b"LMD1";
const FORMAT_VERSION: u32 = 1;

/// Storage precision of tensor data. Parameters are always `f64` in memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F64,
    F32,
}

impl Precision {
    fn width(self) -> usize {
        match self {
            Precision::F64 => 8,
            Precision::F32 => 4,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    /// Byte offset into the data block.
    offset: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    version: u32,
    config: LmConfig,
    vocab_size: usize,
    vocab_fingerprint: String,
    dtype: Precision,
    tensors: Vec<TensorEntry>,
}

impl LmModel {
    pub fn to_bytes(&self, precision: Precision) -> Vec<u8> {
        let tensors = self.params.tensors();
        let mut offset = 0;
        let manifest = tensors
            .iter()
            .map(|(name, shape, data)| {
                let entry = TensorEntry {
                    name: name.clone(),
                    shape: shape.clone(),
                    offset,
                };
                offset += data.len() * precision.width();
                entry
            })
            .collect();
        let header = Header {
            version: FORMAT_VERSION,
            config: self.config.clone(),
            vocab_size: self.vocab_size,
            vocab_fingerprint: self.vocab_fingerprint.clone(),
            dtype: precision,
            tensors: manifest,
        };
        let header = serde_json::to_vec(&header).expect("header serializes");
        let mut out = Vec::with_capacity(8 + header.len() + offset);
        out.extend_from_slice(LM_MAGIC);
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        for (_, _, data) in &tensors {
            for &v in data.iter() {
                match precision {
                    Precision::F64 => out.extend_from_slice(&v.to_le_bytes()),
                    Precision::F32 => out.extend_from_slice(&(v as f32).to_le_bytes()),
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, LmError> {
        let bad = |msg: &str| LmError::Format(msg.to_string());
        if bytes.len() < 8 || &bytes[..4] != LM_MAGIC {
            return Err(bad("missing LMD1 magic"));
        }
        let header_len = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
        let header_end = 8usize.checked_add(header_len).filter(|&e| e <= bytes.len()).ok_or_else(|| bad("truncated header"))?;
        let header: Header =
            serde_json::from_slice(&bytes[8..header_end]).map_err(|e| LmError::Format(format!("bad header: {e}")))?;
        if header.version != FORMAT_VERSION {
            return Err(LmError::Format(format!("unsupported version {}", header.version)));
        }
        header.config.validate()?;
        let data = &bytes[header_end..];
        let width = header.dtype.width();
        let mut params = LmParams::zeros(&header.config, header.vocab_size);
        let expected: Vec<(String, Vec<usize>)> =
            params.tensors().into_iter().map(|(n, s, _)| (n, s)).collect();
        if expected.len() != header.tensors.len() {
            return Err(bad("tensor manifest does not match configuration"));
        }
        for ((entry, (name, shape)), dst) in header.tensors.iter().zip(&expected).zip(params.tensors_mut()) {
            if &entry.name != name || &entry.shape != shape {
                return Err(LmError::Format(format!("unexpected tensor {} {:?}", entry.name, entry.shape)));
            }
            let end = entry.offset + dst.len() * width;
            let raw = data.get(entry.offset..end).ok_or_else(|| bad("truncated tensor data"))?;
            for (v, chunk) in dst.iter_mut().zip(raw.chunks_exact(width)) {
                *v = match header.dtype {
                    Precision::F64 => f64::from_le_bytes(chunk.try_into().expect("8 bytes")),
                    Precision::F32 => f32::from_le_bytes(chunk.try_into().expect("4 bytes")) as f64,
                };
            }
        }
        LmModel::from_parts(header.config, header.vocab_size, header.vocab_fingerprint, params)
    }

    pub fn save(&self, path: &Path, precision: Precision) -> Result<(), LmError> {
        fs::write(path, self.to_bytes(precision))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, LmError> {
        LmModel::from_bytes(&fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocab, TokenizedDocument};

    fn model() -> LmModel {
        let doc = TokenizedDocument {
            id: "a".into(),
            label: None,
            sentences: vec![vec!["x".into(), "y".into(), "z".into()]],
        };
        let vocab = build_vocab(&[doc], 1).unwrap();
        let cfg = LmConfig {
            embed_dim: 3,
            hidden_dim: 4,
            ..Default::default()
        };
        LmModel::new(cfg, &vocab).unwrap()
    }

    #[test]
    fn f64_round_trip_is_bitwise() {
        let m = model();
        let bytes = m.to_bytes(Precision::F64);
        assert_eq!(&bytes[..4], b"LMD1");
        let back = LmModel::from_bytes(&bytes).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.token_losses(&[2, 3, 4]).unwrap(), m.token_losses(&[2, 3, 4]).unwrap());
    }

    #[test]
    fn f32_storage_is_close() {
        let m = model();
        let back = LmModel::from_bytes(&m.to_bytes(Precision::F32)).unwrap();
        let (a, b) = (m.token_losses(&[2, 3]).unwrap(), back.token_losses(&[2, 3]).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-5);
        }
        assert!(m.to_bytes(Precision::F32).len() < m.to_bytes(Precision::F64).len());
    }

    #[test]
    fn rejects_corrupt_files() {
        let bytes = model().to_bytes(Precision::F64);
        assert!(LmModel::from_bytes(b"NOPE").is_err());
        assert!(LmModel::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut wrong_magic = bytes.clone();
        wrong_magic[0] = b'X';
        assert!(matches!(LmModel::from_bytes(&wrong_magic), Err(LmError::Format(_))));
    }
}
