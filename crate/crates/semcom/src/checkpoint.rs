//! Binary checkpoint format: model architecture as JSON plus every
//! named parameter tensor at full f64 precision. Round-trips bit-exact.

use std::fs;
use std::path::Path;

use semcom_core::model::{ModelParams, ModelSpec, ParamEntry};
use semcom_core::Tensor;

use crate::{AppError, Result};

const MAGIC: &[u8; 4] = b"PMSC";
const VERSION: u16 = 1;

pub fn save(path: &Path, spec: &ModelSpec, params: &ModelParams) -> Result<()> {
    let json = serde_json::to_vec(spec)
        .map_err(|e| AppError::Data(format!("cannot encode model spec: {e}")))?;
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(json.len() as u32).to_le_bytes());
    buf.extend_from_slice(&json);
    buf.extend_from_slice(&(params.entries.len() as u32).to_le_bytes());
    for entry in &params.entries {
        let name = entry.name.as_bytes();
        buf.extend_from_slice(&(name.len() as u16).to_le_bytes());
        buf.extend_from_slice(name);
        buf.extend_from_slice(&(entry.tensor.rows as u32).to_le_bytes());
        buf.extend_from_slice(&(entry.tensor.cols as u32).to_le_bytes());
        for &v in &entry.tensor.data {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    crate::harness::atomic_write(path, &buf)
}

pub fn load(path: &Path) -> Result<(ModelSpec, ModelParams)> {
    let bytes = fs::read(path)
        .map_err(|e| AppError::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut offset = 0usize;
    let take = |offset: &mut usize, len: usize| -> Result<&[u8]> {
        if *offset + len > bytes.len() {
            return Err(AppError::Data(format!(
                "{}: truncated checkpoint at byte offset {}",
                path.display(),
                *offset
            )));
        }
        let out = &bytes[*offset..*offset + len];
        *offset += len;
        Ok(out)
    };
    if take(&mut offset, 4)? != MAGIC {
        return Err(AppError::Data(format!(
            "{}: not a checkpoint file (bad magic)",
            path.display()
        )));
    }
    let version = u16::from_le_bytes(take(&mut offset, 2)?.try_into().unwrap());
    if version != VERSION {
        return Err(AppError::Data(format!(
            "{}: unsupported checkpoint version {version}",
            path.display()
        )));
    }
    let json_len = u32::from_le_bytes(take(&mut offset, 4)?.try_into().unwrap()) as usize;
    let spec: ModelSpec = serde_json::from_slice(take(&mut offset, json_len)?)
        .map_err(|e| AppError::Data(format!("{}: bad model spec: {e}", path.display())))?;
    spec.validate()?;
    let count = u32::from_le_bytes(take(&mut offset, 4)?.try_into().unwrap()) as usize;
    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = u16::from_le_bytes(take(&mut offset, 2)?.try_into().unwrap()) as usize;
        let name = String::from_utf8(take(&mut offset, name_len)?.to_vec())
            .map_err(|_| AppError::Data(format!("{}: parameter name is not UTF-8", path.display())))?;
        let rows = u32::from_le_bytes(take(&mut offset, 4)?.try_into().unwrap()) as usize;
        let cols = u32::from_le_bytes(take(&mut offset, 4)?.try_into().unwrap()) as usize;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            data.push(f64::from_le_bytes(take(&mut offset, 8)?.try_into().unwrap()));
        }
        let trainable = !name.ends_with(".rmean") && !name.ends_with(".rvar");
        let tensor = Tensor::new(rows, cols, data)?;
        let tensor = if trainable { tensor.with_grad() } else { tensor };
        entries.push(ParamEntry {
            name,
            tensor,
            trainable,
        });
    }
    if offset != bytes.len() {
        return Err(AppError::Data(format!(
            "{}: trailing bytes after checkpoint at offset {offset}",
            path.display()
        )));
    }
    let params = ModelParams { entries };
    let expected = ModelParams::init(&spec, 0)?;
    if expected.entries.len() != params.entries.len()
        || expected
            .entries
            .iter()
            .zip(&params.entries)
            .any(|(a, b)| a.name != b.name || a.tensor.shape() != b.tensor.shape())
    {
        return Err(AppError::Data(format!(
            "{}: parameters do not match the stored architecture",
            path.display()
        )));
    }
    Ok((spec, params))
}
