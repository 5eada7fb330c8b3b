//! Binary feature-matrix files.
//!
//! Layout, all little-endian: magic `NARD`, version `u16` (= 1), rows `u32`,
//! columns `u32`, then rows x columns `f64` values in row-major order.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

const MAGIC: &[u8; 4] = b"NARD";
const VERSION: u16 = 1;
const HEADER: usize = 4 + 2 + 4 + 4;

pub fn encode_features(values: &Matrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER + values.as_slice().len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(values.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(values.cols() as u32).to_le_bytes());
    for v in values.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_features(bytes: &[u8]) -> Result<Matrix> {
    if bytes.len() < HEADER || &bytes[..4] != MAGIC {
        return Err(Error::Parse("not a NARD feature file".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(Error::Format(format!("feature file version={version} unsupported")));
    }
    let rows = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
    let body = &bytes[HEADER..];
    if body.len() != rows * cols * 8 {
        return Err(Error::Parse(format!(
            "feature file holds {} bytes for a {rows}x{cols} matrix",
            body.len()
        )));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Matrix::from_vec(rows, cols, data)
}

pub fn write_features(path: impl AsRef<Path>, values: &Matrix) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_features(values)).map_err(|e| Error::io(path, e))
}

pub fn read_features(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    decode_features(&fs::read(path).map_err(|e| Error::io(path, e))?)
}
