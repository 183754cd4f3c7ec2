//! Input preparation and 8-bit renderings of images and code frames.

use std::path::Path;

use flexdog_core::dog::IntensityImage;
use flexdog_core::patterns::Pattern;
use flexdog_core::plane::Plane;

use crate::error::{CliError, Result};
use crate::{idx, pgm};

pub const PATTERN_PREFIX: &str = "pattern:";

/// Maps pixels at or above `threshold` to 1 and the rest to 0.
pub fn binarize(image: &IntensityImage<f64>, threshold: f64) -> IntensityImage<f64> {
    let plane = image.plane().map(|v| if v >= threshold { 1.0 } else { 0.0 });
    IntensityImage::from_plane(plane).expect("binary values are in range")
}

/// Loads `pattern:<name>` or an IDX/PGM file, detected by its leading bytes.
pub fn load_input(spec: &str, index: usize, pattern_size: usize) -> Result<IntensityImage<f64>> {
    if let Some(name) = spec.strip_prefix(PATTERN_PREFIX) {
        let pattern: Pattern = name.parse()?;
        return Ok(pattern.render(pattern_size, pattern_size)?);
    }
    let path = Path::new(spec);
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    if idx::is_idx(&bytes) {
        idx::decode_image(&bytes, index)
    } else if pgm::is_pgm(&bytes) {
        pgm::to_image(&pgm::decode(&bytes)?)
    } else {
        Err(CliError::Format(format!("{}: neither an IDX image file nor a binary PGM", path.display())))
    }
}

/// Intensity in `[0, 1]` to gray `round(255·v)`.
pub fn intensity_to_gray(image: &IntensityImage<f64>) -> Vec<u8> {
    image.plane().iter().map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8).collect()
}

/// Signed value to gray with zero at mid-gray (128) and `±full_scale` at the rails.
pub fn signed_to_gray(value: f64, full_scale: f64) -> u8 {
    (127.5 + value * 127.5 / full_scale).round().clamp(0.0, 255.0) as u8
}

pub fn codes_to_gray(codes: &Plane<i32>, max_code: i32) -> Vec<u8> {
    codes.iter().map(|&c| signed_to_gray(c as f64, max_code as f64)).collect()
}

pub fn values_to_gray(values: &Plane<f64>, full_scale: f64) -> Vec<u8> {
    values.iter().map(|&v| signed_to_gray(v, full_scale)).collect()
}
