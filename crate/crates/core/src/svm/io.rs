//! `SVM1` model files: magic, u32 LE header length, JSON header, then the
//! dual coefficients followed by the support vectors (row-major), all LE f64.

use super::{KernelSpec, Scaler, SvmError, SvmModel};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const SVM_MAGIC: &[u8; 4] = b"SVM1";

#[derive(Serialize, Deserialize)]
struct Header {
    version: u32,
    kernel: KernelSpec,
    c: f64,
    scaler: Scaler,
    bias: f64,
    dim: usize,
    support_vectors: usize,
}

impl SvmModel {
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = Header {
            version: 1,
            kernel: self.kernel.clone(),
            c: self.c,
            scaler: self.scaler.clone(),
            bias: self.bias,
            dim: self.dim(),
            support_vectors: self.dual_coef.len(),
        };
        let json = serde_json::to_vec(&header).expect("header serializes");
        let mut out = Vec::with_capacity(8 + json.len() + 8 * (self.dual_coef.len() + self.support_vectors.len()));
        out.extend_from_slice(SVM_MAGIC);
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&json);
        for v in self.dual_coef.iter().chain(&self.support_vectors) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<SvmModel, SvmError> {
        let bad = |m: &str| SvmError::Format(m.to_string());
        if bytes.len() < 8 || &bytes[..4] != SVM_MAGIC {
            return Err(bad("missing SVM1 magic"));
        }
        let len = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
        let json = bytes.get(8..8 + len).ok_or_else(|| bad("truncated header"))?;
        let header: Header = serde_json::from_slice(json).map_err(|e| SvmError::Format(e.to_string()))?;
        if header.version != 1 {
            return Err(SvmError::Format(format!("unsupported version {}", header.version)));
        }
        if header.scaler.mean.len() != header.dim || header.scaler.std.len() != header.dim {
            return Err(bad("scaler width differs from dim"));
        }
        let body = &bytes[8 + len..];
        let count = header.support_vectors * (1 + header.dim);
        if body.len() != 8 * count {
            return Err(bad("support-vector block has the wrong size"));
        }
        let values: Vec<f64> = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let (dual_coef, support_vectors) = values.split_at(header.support_vectors);
        header.kernel.validate()?;
        Ok(SvmModel {
            kernel: header.kernel,
            c: header.c,
            scaler: header.scaler,
            support_vectors: support_vectors.to_vec(),
            dual_coef: dual_coef.to_vec(),
            bias: header.bias,
        })
    }
}

pub fn write_model(path: &Path, model: &SvmModel) -> Result<(), SvmError> {
    std::fs::write(path, model.to_bytes())?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<SvmModel, SvmError> {
    SvmModel::from_bytes(&std::fs::read(path)?)
}
