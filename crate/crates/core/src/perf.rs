//! Power, latency and energy of the analog filter array.
//!
//! Power is `U·I·n` over the `n` filter nodes. One convolution takes one
//! settling period per output pixel, so a 28x28 frame at 0.5 µs per pixel
//! takes 392 µs and costs 2.97 µW × 392 µs = 1.16 nJ with the defaults.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::ErrorMetrics;
use crate::scalar::Scalar;

/// Frame time for 24 frames per second, seconds.
pub const REALTIME_BOUND_S: f64 = 42e-3;
pub const DEFAULT_SUPPLY_V: f64 = 3.3;
pub const DEFAULT_NODE_CURRENT: f64 = 100e-9;
pub const DEFAULT_SETTLE_TIME: f64 = 0.5e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PixelCountMode {
    /// Every input pixel costs one settling period (`M·N`).
    #[default]
    FullMn,
    /// Only valid-convolution outputs are counted (`(M-2P)(N-2P)`).
    ValidOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PowerAccounting {
    /// Power of a single filter block regardless of parallelism.
    #[default]
    Paper,
    /// Power multiplied by the number of concurrently active blocks.
    ParallelBlocks,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerfSpec<T> {
    pub supply_v: T,
    pub node_current: T,
    pub node_count: usize,
    pub settle_time: T,
    pub adc_time: T,
    pub parallelism: usize,
    pub pixel_count_mode: PixelCountMode,
    /// Kernel half width, used by [`PixelCountMode::ValidOnly`].
    pub half_width: usize,
    /// Add one ADC conversion per settling step instead of absorbing it.
    pub adc_separate: bool,
    pub power_accounting: PowerAccounting,
    /// Both DoG scales run on duplicated hardware at the same time.
    pub scales_concurrent: bool,
}

impl<T: Scalar> Default for PerfSpec<T> {
    fn default() -> Self {
        Self::for_half_width(1)
    }
}

impl<T: Scalar> PerfSpec<T> {
    /// Defaults with `(2P + 1)²` filter nodes.
    pub fn for_half_width(half_width: usize) -> Self {
        Self {
            supply_v: T::lit(DEFAULT_SUPPLY_V),
            node_current: T::lit(DEFAULT_NODE_CURRENT),
            node_count: (2 * half_width + 1) * (2 * half_width + 1),
            settle_time: T::lit(DEFAULT_SETTLE_TIME),
            adc_time: T::lit(crate::adc::DEFAULT_T_CONV),
            parallelism: 1,
            pixel_count_mode: PixelCountMode::FullMn,
            half_width,
            adc_separate: false,
            power_accounting: PowerAccounting::Paper,
            scales_concurrent: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("supply_v", self.supply_v),
            ("node_current", self.node_current),
            ("settle_time", self.settle_time),
            ("adc_time", self.adc_time),
        ] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::param(format!("{name} must be positive, got {v}")));
            }
        }
        if self.node_count == 0 {
            return Err(Error::param("node_count must be at least 1"));
        }
        if self.parallelism == 0 {
            return Err(Error::param("parallelism must be at least 1"));
        }
        Ok(())
    }
}

/// `P = U·n·I`, times the block count under parallel accounting.
pub fn power<T: Scalar>(spec: &PerfSpec<T>) -> Result<T> {
    spec.validate()?;
    // (U·n)·I rounds 3.3 V · 9 · 100 nA to exactly 2.97e-6 in f64
    let single = spec.supply_v * T::count(spec.node_count) * spec.node_current;
    Ok(match spec.power_accounting {
        PowerAccounting::Paper => single,
        PowerAccounting::ParallelBlocks => single * T::count(spec.parallelism),
    })
}

/// Pixels that each cost one settling period.
pub fn pixel_count<T: Scalar>(m: usize, n: usize, spec: &PerfSpec<T>) -> Result<usize> {
    if m == 0 || n == 0 {
        return Err(Error::dim(format!("image dimensions must be positive, got {m}x{n}")));
    }
    match spec.pixel_count_mode {
        PixelCountMode::FullMn => Ok(m * n),
        PixelCountMode::ValidOnly => {
            let p2 = 2 * spec.half_width;
            if m <= p2 || n <= p2 {
                return Err(Error::dim(format!("image {m}x{n} too small for half_width {}", spec.half_width)));
            }
            Ok((m - p2) * (n - p2))
        }
    }
}

/// Time of one Gaussian convolution over an `m × n` frame.
pub fn runtime<T: Scalar>(m: usize, n: usize, spec: &PerfSpec<T>) -> Result<T> {
    spec.validate()?;
    let pixels = pixel_count(m, n, spec)?;
    let steps = T::count(pixels.div_ceil(spec.parallelism));
    let mut t = steps * spec.settle_time;
    if spec.adc_separate {
        t = t + steps * spec.adc_time;
    }
    Ok(t)
}

/// Energy of one Gaussian convolution.
pub fn energy<T: Scalar>(m: usize, n: usize, spec: &PerfSpec<T>) -> Result<T> {
    Ok(power(spec)? * runtime(m, n, spec)?)
}

/// Strictly below the 42 ms frame budget.
pub fn realtime_check<T: Scalar>(runtime_s: T) -> bool {
    runtime_s < T::lit(REALTIME_BOUND_S)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerfFigures {
    pub power_w: f64,
    pub runtime_s: f64,
    pub energy_j: f64,
    pub realtime: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfBreakdown {
    pub image_width: usize,
    pub image_height: usize,
    pub pixels_timed: usize,
    pub pixel_count_mode: PixelCountMode,
    pub power_accounting: PowerAccounting,
    pub parallelism: usize,
    pub scales_concurrent: bool,
    pub per_convolution: PerfFigures,
    /// Two convolutions; an extrapolation beyond the single-filter figures.
    pub full_dog: PerfFigures,
}

pub fn breakdown<T: Scalar>(m: usize, n: usize, spec: &PerfSpec<T>) -> Result<PerfBreakdown> {
    let p = power(spec)?;
    let t = runtime(m, n, spec)?;
    let e = p * t;
    let two = T::lit(2.0);
    let (dog_p, dog_t) = if spec.scales_concurrent { (p * two, t) } else { (p, t * two) };
    Ok(PerfBreakdown {
        image_width: m,
        image_height: n,
        pixels_timed: pixel_count(m, n, spec)?,
        pixel_count_mode: spec.pixel_count_mode,
        power_accounting: spec.power_accounting,
        parallelism: spec.parallelism,
        scales_concurrent: spec.scales_concurrent,
        per_convolution: PerfFigures {
            power_w: p.as_f64(),
            runtime_s: t.as_f64(),
            energy_j: e.as_f64(),
            realtime: realtime_check(t),
        },
        full_dog: PerfFigures {
            power_w: dog_p.as_f64(),
            runtime_s: dog_t.as_f64(),
            energy_j: (e * two).as_f64(),
            realtime: realtime_check(dog_t),
        },
    })
}

/// Everything known about one pipeline run.
///
/// The top-level power, runtime and energy refer to one convolution and
/// satisfy `energy_j == power_w * runtime_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub power_w: f64,
    pub runtime_s: f64,
    pub energy_j: f64,
    pub realtime: bool,
    pub perf: PerfBreakdown,
    pub errors: ErrorMetrics,
    pub saturation_count: usize,
    /// Multipliers applied to each scale's codes before subtraction.
    pub scale_compensation: [f64; 2],
    /// Programmed gain scales `s1`, `s2`.
    pub kernel_scales: [f64; 2],
    pub vref_v: f64,
    pub adc_bits: u32,
    pub seed: u64,
}

impl SimReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        perf: PerfBreakdown,
        errors: ErrorMetrics,
        saturation_count: usize,
        scale_compensation: [f64; 2],
        kernel_scales: [f64; 2],
        vref_v: f64,
        adc_bits: u32,
        seed: u64,
    ) -> Self {
        let pc = perf.per_convolution;
        Self {
            power_w: pc.power_w,
            runtime_s: pc.runtime_s,
            energy_j: pc.energy_j,
            realtime: pc.realtime,
            perf,
            errors,
            saturation_count,
            scale_compensation,
            kernel_scales,
            vref_v,
            adc_bits,
            seed,
        }
    }
}
