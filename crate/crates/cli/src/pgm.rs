//! Binary PGM (P5) with 8-bit samples.

use flexdog_core::dog::IntensityImage;

use crate::error::{CliError, Result};

pub fn encode(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    assert_eq!(pixels.len(), width * height);
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

pub fn is_pgm(bytes: &[u8]) -> bool {
    bytes.starts_with(b"P5")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub pixels: Vec<u8>,
}

/// Parses a P5 image with `maxval <= 255`. Header comments are skipped.
pub fn decode(bytes: &[u8]) -> Result<Pgm> {
    if !is_pgm(bytes) {
        return Err(CliError::Format("not a binary PGM (missing P5 magic)".into()));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err(CliError::Format("PGM header truncated".into())),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| b.is_ascii_digit()) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| CliError::Format("malformed PGM header field".into()))?;
    }
    // exactly one whitespace byte separates the header from the raster
    if !bytes.get(pos).is_some_and(|b| b.is_ascii_whitespace()) {
        return Err(CliError::Format("PGM header not terminated".into()));
    }
    pos += 1;
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(CliError::Format("PGM with zero width or height".into()));
    }
    if maxval == 0 || maxval > 255 {
        return Err(CliError::Format(format!("unsupported PGM maxval {maxval}")));
    }
    let pixels = bytes
        .get(pos..pos + width * height)
        .ok_or_else(|| CliError::Format("PGM raster truncated".into()))?
        .to_vec();
    Ok(Pgm { width, height, maxval: maxval as u16, pixels })
}

pub fn to_image(pgm: &Pgm) -> Result<IntensityImage<f64>> {
    let max = pgm.maxval as f64;
    Ok(IntensityImage::new(
        pgm.width,
        pgm.height,
        pgm.pixels.iter().map(|&p| (p as f64 / max).min(1.0)).collect(),
    )?)
}
