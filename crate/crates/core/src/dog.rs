//! Digital Difference-of-Gaussian reference pipeline.
//!
//! Everything here is plain floating point arithmetic with a fixed summation
//! order, so results are reproducible bit for bit. The analog simulation in
//! [`crate::pipeline`] is checked against these routines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plane::Plane;
use crate::scalar::Scalar;

/// Default small scale for 3x3 kernels.
pub const DEFAULT_SIGMA1: f64 = 0.85;
/// Default ratio between the two DoG scales.
pub const DEFAULT_SIGMA_RATIO: f64 = std::f64::consts::SQRT_2;

/// Input image with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityImage<T> {
    pixels: Plane<T>,
}

impl<T: Scalar> IntensityImage<T> {
    pub fn new(width: usize, height: usize, pixels: Vec<T>) -> Result<Self> {
        Self::from_plane(Plane::new(width, height, pixels)?)
    }

    pub fn from_plane(pixels: Plane<T>) -> Result<Self> {
        if let Some(bad) = pixels.iter().find(|v| !(**v >= T::zero() && **v <= T::one())) {
            return Err(Error::InvalidInput(format!("pixel value {bad} outside [0, 1]")));
        }
        Ok(Self { pixels })
    }

    pub fn constant(width: usize, height: usize, value: T) -> Result<Self> {
        Self::from_plane(Plane::filled(width, height, value)?)
    }

    pub fn width(&self) -> usize {
        self.pixels.width()
    }

    pub fn height(&self) -> usize {
        self.pixels.height()
    }

    pub fn plane(&self) -> &Plane<T> {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> T {
        self.pixels.get(x, y)
    }
}

/// Square Gaussian weight grid of side `2P + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianKernel<T> {
    sigma: T,
    half_width: usize,
    weights: Vec<T>,
    normalized: bool,
}

impl<T: Scalar> GaussianKernel<T> {
    /// Samples `1/(2πσ²)·exp(-(x²+y²)/(2σ²))` on integer offsets `|x|, |y| <= P`.
    pub fn new(sigma: T, half_width: usize, normalize: bool) -> Result<Self> {
        if !(sigma > T::zero()) || !sigma.is_finite() {
            return Err(Error::param(format!("sigma must be positive, got {sigma}")));
        }
        if half_width == 0 {
            return Err(Error::param("half_width must be at least 1"));
        }
        let two_sigma_sq = T::lit(2.0) * sigma * sigma;
        let peak = T::one() / (T::PI() * two_sigma_sq);
        let p = half_width as i64;
        let mut weights = Vec::with_capacity(((2 * p + 1) * (2 * p + 1)) as usize);
        for dy in -p..=p {
            for dx in -p..=p {
                let r2 = T::lit((dx * dx + dy * dy) as f64);
                weights.push(peak * (-r2 / two_sigma_sq).exp());
            }
        }
        let kernel = Self { sigma, half_width, weights, normalized: false };
        Ok(if normalize { kernel.normalized() } else { kernel })
    }

    /// Arbitrary nonnegative weight grid, for flat or identity kernels.
    pub fn from_weights(sigma: T, half_width: usize, weights: Vec<T>) -> Result<Self> {
        let side = 2 * half_width + 1;
        if half_width == 0 || weights.len() != side * side {
            return Err(Error::param(format!(
                "expected {} weights for half_width {half_width}, got {}",
                side * side,
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(*w >= T::zero()) || !w.is_finite()) {
            return Err(Error::InvalidKernel("weights must be finite and nonnegative".into()));
        }
        Ok(Self { sigma, half_width, weights, normalized: false })
    }

    /// Copy rescaled so the weights sum to one.
    pub fn normalized(&self) -> Self {
        let sum = self.sum();
        Self {
            sigma: self.sigma,
            half_width: self.half_width,
            weights: self.weights.iter().map(|&w| w / sum).collect(),
            normalized: true,
        }
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn side(&self) -> usize {
        2 * self.half_width + 1
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Row-major weights, top-left offset first.
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Weight at offset `(dx, dy)` from the centre.
    pub fn weight(&self, dx: isize, dy: isize) -> T {
        let p = self.half_width as isize;
        assert!(dx.abs() <= p && dy.abs() <= p, "offset ({dx}, {dy}) outside kernel");
        self.weights[((dy + p) as usize) * self.side() + (dx + p) as usize]
    }

    pub fn sum(&self) -> T {
        self.weights.iter().fold(T::zero(), |acc, &w| acc + w)
    }

    pub fn max_weight(&self) -> T {
        self.weights.iter().fold(T::zero(), |m, &w| m.max(w))
    }
}

/// Result of one valid-mode Gaussian convolution. Values are not clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredImage<T> {
    pub values: Plane<T>,
    pub sigma: T,
}

/// Signed difference of two filtered images.
#[derive(Debug, Clone, PartialEq)]
pub struct DogImage<T> {
    pub values: Plane<T>,
    pub sigma1: T,
    pub sigma2: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCount {
    pub multiplications: u64,
    pub additions: u64,
}

fn check_fits<T>(width: usize, height: usize, kernel: &GaussianKernel<T>) -> Result<()> {
    let side = 2 * kernel.half_width + 1;
    if width < side || height < side {
        return Err(Error::dim(format!(
            "image {width}x{height} smaller than {side}x{side} kernel"
        )));
    }
    Ok(())
}

/// Valid-mode correlation on an unconstrained grid.
///
/// Each output pixel sums its window in row-major kernel order.
pub fn correlate_valid<T: Scalar>(input: &Plane<T>, kernel: &GaussianKernel<T>) -> Result<Plane<T>> {
    check_fits(input.width(), input.height(), kernel)?;
    let side = kernel.side();
    let w = kernel.weights();
    Plane::from_fn(input.width() + 1 - side, input.height() + 1 - side, |x, y| {
        let mut acc = T::zero();
        for ky in 0..side {
            for kx in 0..side {
                acc = acc + input.get(x + kx, y + ky) * w[ky * side + kx];
            }
        }
        acc
    })
}

/// Same-size correlation with zero padding. Visualization only.
pub fn correlate_zero_pad<T: Scalar>(input: &Plane<T>, kernel: &GaussianKernel<T>) -> Plane<T> {
    let p = kernel.half_width() as isize;
    let (width, height) = (input.width() as isize, input.height() as isize);
    Plane::from_fn(input.width(), input.height(), |x, y| {
        let mut acc = T::zero();
        for dy in -p..=p {
            for dx in -p..=p {
                let (sx, sy) = (x as isize + dx, y as isize + dy);
                if sx >= 0 && sy >= 0 && sx < width && sy < height {
                    acc = acc + input.get(sx as usize, sy as usize) * kernel.weight(dx, dy);
                }
            }
        }
        acc
    })
    .expect("input shape is valid")
}

pub fn convolve_valid<T: Scalar>(image: &IntensityImage<T>, kernel: &GaussianKernel<T>) -> Result<FilteredImage<T>> {
    Ok(FilteredImage { values: correlate_valid(image.plane(), kernel)?, sigma: kernel.sigma() })
}

/// `M(σ1) - M(σ2)` with matching kernel sizes and `σ1 < σ2`.
pub fn dog<T: Scalar>(
    image: &IntensityImage<T>,
    k1: &GaussianKernel<T>,
    k2: &GaussianKernel<T>,
) -> Result<DogImage<T>> {
    if k1.half_width() != k2.half_width() {
        return Err(Error::config(format!(
            "kernel half widths differ: {} vs {}",
            k1.half_width(),
            k2.half_width()
        )));
    }
    if !(k1.sigma() < k2.sigma()) {
        return Err(Error::config(format!(
            "sigma1 ({}) must be smaller than sigma2 ({})",
            k1.sigma(),
            k2.sigma()
        )));
    }
    difference(&convolve_valid(image, k1)?, &convolve_valid(image, k2)?)
}

/// Elementwise `m1 - m2` without any ordering check on the scales.
pub fn difference<T: Scalar>(m1: &FilteredImage<T>, m2: &FilteredImage<T>) -> Result<DogImage<T>> {
    Ok(DogImage {
        values: m1.values.zip_with(&m2.values, |a, b| a - b)?,
        sigma1: m1.sigma,
        sigma2: m2.sigma,
    })
}

/// Multiply/add counts of one direct valid-mode Gaussian filter.
pub fn op_count(m: usize, n: usize, p: usize) -> Result<OpCount> {
    if p == 0 {
        return Err(Error::param("half_width must be at least 1"));
    }
    if m <= 2 * p || n <= 2 * p {
        return Err(Error::dim(format!("image {m}x{n} too small for half_width {p}")));
    }
    let outputs = ((m - 2 * p) * (n - 2 * p)) as u64;
    let taps = ((2 * p + 1) * (2 * p + 1)) as u64;
    Ok(OpCount { multiplications: outputs * taps, additions: outputs * (taps - 1) })
}
