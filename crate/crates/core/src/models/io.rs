//! Binary prediction-tensor files.
//!
//! Layout: the 8 magic bytes `ICALPT01`, then `n_points`, `m`, `c` as
//! little-endian `u64`, then `n_points * m * c` little-endian `f32` values in
//! point-major, sample-major, class-minor order.

use std::fs;
use std::path::Path;

use super::tensor::{PredictionTensor, SIMPLEX_TOL};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"ICALPT01";
const HEADER_LEN: usize = 8 + 3 * 8;

fn format_err<T>(offset: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Format { offset: offset as u64, message: message.into() })
}

pub fn encode_predictions(tensor: &PredictionTensor) -> Vec<u8> {
    let (n, m, c) = tensor.shape();
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * tensor.values().len());
    out.extend_from_slice(MAGIC);
    for dim in [n, m, c] {
        out.extend_from_slice(&(dim as u64).to_le_bytes());
    }
    for v in tensor.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_predictions(bytes: &[u8]) -> Result<PredictionTensor> {
    if bytes.len() < MAGIC.len() {
        return format_err(bytes.len(), "file shorter than magic");
    }
    if &bytes[..8] != MAGIC {
        return format_err(0, "bad magic, expected ICALPT01");
    }
    if bytes.len() < HEADER_LEN {
        return format_err(bytes.len(), "truncated header");
    }
    let dim = |k: usize| u64::from_le_bytes(bytes[8 + 8 * k..16 + 8 * k].try_into().unwrap());
    let (n, m, c) = (dim(0), dim(1), dim(2));
    if m == 0 || c == 0 {
        return format_err(16, format!("m and c must be positive, got m={m}, c={c}"));
    }
    let count = n
        .checked_mul(m)
        .and_then(|v| v.checked_mul(c))
        .filter(|v| v.checked_mul(4).is_some_and(|b| b <= usize::MAX as u64))
        .ok_or_else(|| Error::Format { offset: 8, message: "dimensions overflow".into() })?
        as usize;
    let expected = HEADER_LEN + 4 * count;
    if bytes.len() < expected {
        return format_err(bytes.len(), format!("truncated payload: expected {expected} bytes, found {}", bytes.len()));
    }
    if bytes.len() > expected {
        return format_err(expected, "trailing bytes after payload");
    }

    let mut values = Vec::with_capacity(count);
    for (k, chunk) in bytes[HEADER_LEN..].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() || !(0.0..=1.0).contains(&v) {
            return format_err(HEADER_LEN + 4 * k, format!("value {v} is not a probability"));
        }
        values.push(v);
    }
    let c = c as usize;
    for (s, slice) in values.chunks_exact(c).enumerate() {
        let total: f64 = slice.iter().map(|&v| v as f64).sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return format_err(HEADER_LEN + 4 * s * c, format!("slice sums to {total}"));
        }
    }
    PredictionTensor::new(n as usize, m as usize, c, values)
}

pub fn save_predictions(tensor: &PredictionTensor, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_predictions(tensor))?;
    Ok(())
}

pub fn load_predictions(path: impl AsRef<Path>) -> Result<PredictionTensor> {
    decode_predictions(&fs::read(path)?)
}
