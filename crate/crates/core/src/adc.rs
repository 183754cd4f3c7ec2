//! Ideal mid-tread ADC.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_BITS: u32 = 8;
pub const DEFAULT_T_CONV: f64 = 5e-9;
pub const MAX_BITS: u32 = 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdcSpec<T> {
    pub bits: u32,
    /// Full-scale input, volts.
    pub vref: T,
    /// Conversion time, seconds.
    pub t_conv: T,
}

impl<T: Scalar> Default for AdcSpec<T> {
    fn default() -> Self {
        Self { bits: DEFAULT_BITS, vref: T::one(), t_conv: T::lit(DEFAULT_T_CONV) }
    }
}

impl<T: Scalar> AdcSpec<T> {
    pub fn validate(&self) -> Result<()> {
        if self.bits == 0 || self.bits > MAX_BITS {
            return Err(Error::param(format!("ADC bits must be in 1..={MAX_BITS}, got {}", self.bits)));
        }
        if !(self.vref > T::zero()) || !self.vref.is_finite() {
            return Err(Error::param(format!("ADC vref must be positive, got {}", self.vref)));
        }
        if !(self.t_conv > T::zero()) {
            return Err(Error::param(format!("ADC conversion time must be positive, got {}", self.t_conv)));
        }
        Ok(())
    }

    /// Largest output code, `2^bits - 1`.
    pub fn max_code(&self) -> i32 {
        ((1u64 << self.bits) - 1) as i32
    }

    /// Volts per code step.
    pub fn lsb(&self) -> T {
        self.vref / T::lit(self.max_code() as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conversion {
    pub code: i32,
    /// Input was outside `[0, vref]` and got clamped.
    pub saturated: bool,
}

/// `clamp(round(v / vref · (2^bits - 1)), 0, 2^bits - 1)`, rounding half away from zero.
pub fn quantize<T: Scalar>(v: T, adc: &AdcSpec<T>) -> Conversion {
    let max = adc.max_code();
    if v.is_nan() {
        return Conversion { code: 0, saturated: true };
    }
    let saturated = v < T::zero() || v > adc.vref;
    let scaled = (v / adc.vref * T::lit(max as f64)).round();
    let code = if scaled <= T::zero() {
        0
    } else if scaled >= T::lit(max as f64) {
        max
    } else {
        scaled.to_i32().expect("in range")
    };
    Conversion { code, saturated }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let adc = AdcSpec::<f64> { vref: 2.0, ..AdcSpec::default() };
        assert_eq!(quantize(0.0, &adc).code, 0);
        assert_eq!(quantize(2.0, &adc), Conversion { code: 255, saturated: false });
        assert_eq!(quantize(1.0, &adc).code, 128);
        assert_eq!(quantize(-0.1, &adc), Conversion { code: 0, saturated: true });
        assert_eq!(quantize(2.1, &adc), Conversion { code: 255, saturated: true });
        assert!(quantize(f64::NAN, &adc).saturated);
    }

    #[test]
    fn validation() {
        assert!(AdcSpec::<f64> { bits: 0, ..AdcSpec::default() }.validate().is_err());
        assert!(AdcSpec::<f64> { vref: 0.0, ..AdcSpec::default() }.validate().is_err());
        assert!(AdcSpec::<f64> { t_conv: -1.0, ..AdcSpec::default() }.validate().is_err());
        assert!(AdcSpec::<f64>::default().validate().is_ok());
    }

    #[test]
    fn one_bit_adc() {
        let adc = AdcSpec::<f64> { bits: 1, ..AdcSpec::default() };
        assert_eq!(adc.max_code(), 1);
        assert_eq!(quantize(0.49, &adc).code, 0);
        assert_eq!(quantize(0.5, &adc).code, 1);
    }
}
