//! MLP checkpoint container.
//!
//! Layout (all little-endian):
//!
//! | offset | size | content                      |
//! |--------|------|------------------------------|
//! | 0      | 8    | magic `DPRSA001`             |
//! | 8      | 4    | input dim (u32)              |
//! | 12     | 4    | hidden width (u32), shared   |
//! | 16     | 4    | output dim (u32)             |
//! | 20     | 8·n  | packed parameters (f64)      |

use std::io::{Read, Write};

use super::model::{Classifier, MlpModel};
use super::vector::ParamVector;
use crate::error::{DataError, Error, Result};

pub const MAGIC: &[u8; 8] = b"DPRSA001";
pub const HEADER_LEN: usize = 20;

pub fn write_checkpoint<W: Write>(mut w: W, model: &MlpModel, params: &ParamVector) -> Result<()> {
    if params.len() != model.num_params() {
        return Err(Error::DimensionMismatch {
            expected: model.num_params(),
            actual: params.len(),
        });
    }
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * params.len());
    buf.extend_from_slice(MAGIC);
    for d in [model.input_dim, model.hidden_dim, model.output_dim] {
        let d = u32::try_from(d).map_err(|_| Error::InvalidInput(format!("dimension {d} exceeds u32")))?;
        buf.extend_from_slice(&d.to_le_bytes());
    }
    for v in params.iter() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<(MlpModel, ParamVector)> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < HEADER_LEN {
        return Err(DataError::Checkpoint(format!("{} bytes is shorter than the header", bytes.len())).into());
    }
    if &bytes[..8] != MAGIC {
        return Err(DataError::Checkpoint("bad magic".into()).into());
    }
    let dim = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
    let model = MlpModel::new(dim(8), dim(12), dim(16))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != 8 * model.num_params() {
        return Err(DataError::Checkpoint(format!(
            "expected {} parameter bytes, found {}",
            8 * model.num_params(),
            body.len()
        ))
        .into());
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((model, ParamVector::new(values)?))
}
