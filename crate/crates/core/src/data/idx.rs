//! Big-endian IDX container as used by the MNIST distribution.
//!
//! Images: magic `0x00000803`, then `n`, `rows`, `cols` as u32, then `n·rows·cols`
//! unsigned pixel bytes. Labels: magic `0x00000801`, then `n`, then `n` bytes.

use std::path::Path;

use super::Dataset;
use crate::error::{DataError, Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;
const MNIST_CLASSES: usize = 10;

pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset> {
    let read = |p: &Path| {
        std::fs::read(p).map_err(|source| DataError::Io {
            path: p.display().to_string(),
            source,
        })
    };
    let images_path = images_path.as_ref();
    let labels_path = labels_path.as_ref();
    let images = read(images_path)?;
    let labels = read(labels_path)?;
    parse_idx(
        &images,
        &labels,
        &images_path.display().to_string(),
        &labels_path.display().to_string(),
    )
}

/// Parses in-memory image and label containers into a dataset with pixels
/// scaled to `[0, 1]`.
pub fn parse_idx(images: &[u8], labels: &[u8], images_name: &str, labels_name: &str) -> Result<Dataset> {
    let (n_images, header) = read_header(images, IMAGES_MAGIC, 3, images_name)?;
    let (n, rows, cols) = (header[0], header[1], header[2]);
    let dim = rows * cols;
    let pixels = body(images, 16, n * dim, images_name)?;

    let (n_labels, lheader) = read_header(labels, LABELS_MAGIC, 1, labels_name)?;
    debug_assert_eq!(n_images, n);
    if lheader[0] != n {
        return Err(DataError::CountMismatch {
            images: n,
            labels: lheader[0],
        }
        .into());
    }
    let label_bytes = body(labels, 8, n_labels, labels_name)?;
    if let Some(index) = label_bytes.iter().position(|&l| usize::from(l) >= MNIST_CLASSES) {
        return Err(DataError::BadLabel {
            index,
            label: label_bytes[index],
            num_classes: MNIST_CLASSES,
        }
        .into());
    }

    let features = pixels.iter().map(|&p| f64::from(p) / 255.0).collect();
    let labels = label_bytes.iter().map(|&l| usize::from(l)).collect();
    Dataset::new(features, dim.max(1), labels, MNIST_CLASSES)
}

fn read_header(bytes: &[u8], magic: u32, ndims: usize, name: &str) -> Result<(usize, Vec<usize>)> {
    let header_len = 4 + 4 * ndims;
    if bytes.len() < 4 {
        return Err(truncated(name, header_len, bytes.len()));
    }
    let found = be_u32(bytes, 0);
    if found != magic {
        return Err(DataError::BadMagic {
            file: name.to_string(),
            expected: magic,
            found,
        }
        .into());
    }
    if bytes.len() < header_len {
        return Err(truncated(name, header_len, bytes.len()));
    }
    let dims: Vec<usize> = (0..ndims).map(|k| be_u32(bytes, 4 + 4 * k) as usize).collect();
    Ok((dims[0], dims))
}

fn body<'a>(bytes: &'a [u8], offset: usize, len: usize, name: &str) -> Result<&'a [u8]> {
    let needed = offset + len;
    if bytes.len() < needed {
        return Err(truncated(name, needed, bytes.len()));
    }
    Ok(&bytes[offset..needed])
}

fn truncated(name: &str, needed: usize, found: usize) -> Error {
    DataError::Truncated {
        file: name.to_string(),
        needed,
        found,
    }
    .into()
}

fn be_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_be_bytes(bytes[at..at + 4].try_into().unwrap())
}

/// Encodes features (rounded onto the 1/255 grid) as an IDX image container.
pub fn encode_idx_images(ds: &Dataset, rows: usize, cols: usize) -> Result<Vec<u8>> {
    if rows * cols != ds.dim() {
        return Err(Error::DimensionMismatch {
            expected: ds.dim(),
            actual: rows * cols,
        });
    }
    let mut out = Vec::with_capacity(16 + ds.features().len());
    for v in [IMAGES_MAGIC, ds.len() as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend(ds.features().iter().map(|&x| (x.clamp(0.0, 1.0) * 255.0).round() as u8));
    Ok(out)
}

pub fn encode_idx_labels(ds: &Dataset) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(8 + ds.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(ds.len() as u32).to_be_bytes());
    for &l in ds.labels() {
        out.push(u8::try_from(l).map_err(|_| Error::InvalidInput(format!("label {l} does not fit a byte")))?);
    }
    Ok(out)
}
