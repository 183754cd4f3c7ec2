//! Built-in binary test images.

use std::fmt;
use std::str::FromStr;

use crate::dog::IntensityImage;
use crate::error::{Error, Result};
use crate::plane::Plane;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pattern {
    /// Every pixel bright.
    Constant,
    /// Left half dark, right half bright.
    StepEdge,
    /// 4x4 pixel squares.
    Checkerboard,
    /// A single bright pixel at the centre.
    Dot,
    /// Thick annulus, roughly a handwritten zero.
    Ring,
    /// Plus sign with 4 pixel wide strokes.
    Cross,
}

impl Pattern {
    pub const ALL: [Pattern; 6] = [
        Pattern::Constant,
        Pattern::StepEdge,
        Pattern::Checkerboard,
        Pattern::Dot,
        Pattern::Ring,
        Pattern::Cross,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Pattern::Constant => "constant",
            Pattern::StepEdge => "step",
            Pattern::Checkerboard => "checkerboard",
            Pattern::Dot => "dot",
            Pattern::Ring => "ring",
            Pattern::Cross => "cross",
        }
    }

    pub fn render<T: Scalar>(self, width: usize, height: usize) -> Result<IntensityImage<T>> {
        let (cx, cy) = (width as f64 / 2.0 - 0.5, height as f64 / 2.0 - 0.5);
        let r_max = width.min(height) as f64 / 2.0;
        let on = |b: bool| if b { T::one() } else { T::zero() };
        let plane = Plane::from_fn(width, height, |x, y| {
            let (fx, fy) = (x as f64, y as f64);
            on(match self {
                Pattern::Constant => true,
                Pattern::StepEdge => x >= width / 2,
                Pattern::Checkerboard => (x / 4 + y / 4) % 2 == 1,
                Pattern::Dot => x == width / 2 && y == height / 2,
                Pattern::Ring => {
                    let r = ((fx - cx).powi(2) + (fy - cy).powi(2)).sqrt();
                    r >= 0.35 * r_max && r <= 0.7 * r_max
                }
                Pattern::Cross => (fx - cx).abs() < 2.0 || (fy - cy).abs() < 2.0,
            })
        })?;
        IntensityImage::from_plane(plane)
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Pattern::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::config(format!("unknown pattern {s:?}")))
    }
}
