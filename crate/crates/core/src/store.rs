//! Artifact-store primitives.
//!
//! Every persisted artifact is a directory holding a `meta.toml` document
//! plus raw little-endian binary arrays (`*.f32`, `*.u8`). Readers validate
//! shapes against the metadata before accepting the payload.

use crate::error::{CtflowError, Result};
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

fn io_err(path: &Path, source: std::io::Error) -> CtflowError {
    CtflowError::StoreIo {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_f32(path: &Path, data: &[f32]) -> Result<()> {
    let mut buf = Vec::with_capacity(data.len() * 4);
    for v in data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut f = fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(&buf).map_err(|e| io_err(path, e))
}

pub fn read_f32(path: &Path, expected_len: usize) -> Result<Vec<f32>> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .map_err(|e| io_err(path, e))?
        .read_to_end(&mut bytes)
        .map_err(|e| io_err(path, e))?;
    if bytes.len() != expected_len * 4 {
        return Err(CtflowError::Store(format!(
            "{}: expected {} f32 values ({} bytes), file has {} bytes",
            path.display(),
            expected_len,
            expected_len * 4,
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

pub fn write_u8(path: &Path, data: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(data).map_err(|e| io_err(path, e))
}

pub fn read_u8(path: &Path, expected_len: usize) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .map_err(|e| io_err(path, e))?
        .read_to_end(&mut bytes)
        .map_err(|e| io_err(path, e))?;
    if bytes.len() != expected_len {
        return Err(CtflowError::Store(format!(
            "{}: expected {} bytes, file has {}",
            path.display(),
            expected_len,
            bytes.len()
        )));
    }
    Ok(bytes)
}

pub fn write_f64(path: &Path, data: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(data.len() * 8);
    for v in data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut f = fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(&buf).map_err(|e| io_err(path, e))
}

pub fn read_f64(path: &Path, expected_len: usize) -> Result<Vec<f64>> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .map_err(|e| io_err(path, e))?
        .read_to_end(&mut bytes)
        .map_err(|e| io_err(path, e))?;
    if bytes.len() != expected_len * 8 {
        return Err(CtflowError::Store(format!(
            "{}: expected {} f64 values, file has {} bytes",
            path.display(),
            expected_len,
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes([c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]]))
        .collect())
}

pub fn write_meta<T: serde::Serialize>(dir: &Path, meta: &T) -> Result<()> {
    let text = toml::to_string_pretty(meta)
        .map_err(|e| CtflowError::Store(format!("metadata serialization: {e}")))?;
    let path = dir.join("meta.toml");
    fs::write(&path, text).map_err(|e| io_err(&path, e))
}

pub fn read_meta<T: serde::de::DeserializeOwned>(dir: &Path) -> Result<T> {
    let path = dir.join("meta.toml");
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    toml::from_str(&text).map_err(|e| CtflowError::Store(format!("{}: {e}", path.display())))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}
