//! MNIST IDX container.
//!
//! Layout: big-endian `u32` magic (`0x00000803` for unsigned-byte 3-D image
//! arrays), one big-endian `u32` per dimension, then raw bytes.

use std::path::Path;

use flexdog_core::dog::IntensityImage;

use crate::error::{CliError, Result};

pub const IMAGES_MAGIC: u32 = 2051;
pub const LABELS_MAGIC: u32 = 2049;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IdxHeader {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
}

fn be_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| CliError::Format("IDX header truncated".into()))
}

pub fn is_idx(bytes: &[u8]) -> bool {
    bytes.len() >= 4 && bytes[0] == 0 && bytes[1] == 0 && bytes[2] == 0x08
}

pub fn parse_header(bytes: &[u8]) -> Result<IdxHeader> {
    let magic = be_u32(bytes, 0)?;
    if magic != IMAGES_MAGIC {
        let hint = if magic == LABELS_MAGIC { " (this is a labels file)" } else { "" };
        return Err(CliError::Format(format!(
            "bad IDX magic {magic:#010x}, expected {IMAGES_MAGIC:#010x}{hint}"
        )));
    }
    let header = IdxHeader {
        count: be_u32(bytes, 4)? as usize,
        rows: be_u32(bytes, 8)? as usize,
        cols: be_u32(bytes, 12)? as usize,
    };
    if header.rows == 0 || header.cols == 0 {
        return Err(CliError::Format("IDX image with zero rows or columns".into()));
    }
    Ok(header)
}

/// Image `index` of an IDX buffer, scaled to `[0, 1]` by `/255`.
pub fn decode_image(bytes: &[u8], index: usize) -> Result<IntensityImage<f64>> {
    let h = parse_header(bytes)?;
    if index >= h.count {
        return Err(CliError::Config(format!("image index {index} out of range (file holds {})", h.count)));
    }
    let size = h.rows * h.cols;
    let start = 16 + index * size;
    let raw = bytes
        .get(start..start + size)
        .ok_or_else(|| CliError::Format(format!("IDX payload truncated before image {index}")))?;
    Ok(IntensityImage::new(h.cols, h.rows, raw.iter().map(|&b| b as f64 / 255.0).collect())?)
}

pub fn load_idx_image(path: &Path, index: usize) -> Result<IntensityImage<f64>> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode_image(&bytes, index)
}

/// Serializes images into an IDX images buffer. Used to build fixtures.
pub fn encode_images(rows: usize, cols: usize, images: &[Vec<u8>]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.len() * rows * cols);
    for v in [IMAGES_MAGIC, images.len() as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    for img in images {
        assert_eq!(img.len(), rows * cols);
        out.extend_from_slice(img);
    }
    out
}
