//! Behavioral simulator of an analog Difference-of-Gaussian filter array.
//!
//! Numeric routines are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64` unless suffixed with `32`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adc;
pub mod cell;
pub mod dog;
pub mod error;
pub mod fit;
pub mod patterns;
pub mod perf;
pub mod pipeline;
pub mod plane;
pub mod scalar;
pub mod variation;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Image = dog::IntensityImage<f64>;
pub type Image32 = dog::IntensityImage<f32>;
pub type Kernel = dog::GaussianKernel<f64>;
pub type GaussianKernel32 = dog::GaussianKernel<f32>;
pub type Grid = plane::Plane<f64>;
pub type Dog = dog::DogImage<f64>;
pub type CellParams = cell::CellParams<f64>;
pub type CellParams32 = cell::CellParams<f32>;
pub type ProgrammedKernel = cell::ProgrammedKernel<f64>;
pub type DeviationReport = cell::DeviationReport<f64>;
pub type AdcSpec = adc::AdcSpec<f64>;
pub type PerfSpec = perf::PerfSpec<f64>;
pub type AnalogConfig = pipeline::AnalogConfig<f64>;
pub type AnalogConfig32 = pipeline::AnalogConfig<f32>;
pub type VariationSample = variation::VariationSample<f64>;
