//! Seeded process-variation draws.
//!
//! Every random quantity comes from a ChaCha8 generator seeded with the
//! trial seed, one stream per quantity, so a draw never depends on how many
//! values another quantity consumed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Truncation bound of the normal distribution, in standard deviations.
pub const TRUNCATION_SIGMAS: f64 = 4.0;

const SENSOR_STREAM: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariationDistribution {
    /// `1 + σ·z` with `z ~ N(0, 1)` truncated at ±4.
    #[default]
    NormalTruncated,
    /// `exp(σ·z)`, median one.
    Lognormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VariationModel {
    pub gamma_rel_sigma: f64,
    pub gain_rel_sigma: f64,
    pub sensor_rel_sigma: f64,
    pub distribution: VariationDistribution,
}

impl VariationModel {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn uniform(rel_sigma: f64) -> Self {
        Self {
            gamma_rel_sigma: rel_sigma,
            gain_rel_sigma: rel_sigma,
            sensor_rel_sigma: rel_sigma,
            distribution: VariationDistribution::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, s) in [
            ("gamma_rel_sigma", self.gamma_rel_sigma),
            ("gain_rel_sigma", self.gain_rel_sigma),
            ("sensor_rel_sigma", self.sensor_rel_sigma),
        ] {
            if !(s >= 0.0) || !s.is_finite() {
                return Err(Error::param(format!("{name} must be a finite nonnegative number, got {s}")));
            }
        }
        Ok(())
    }

    fn multiplier<T: Scalar>(&self, rel_sigma: f64, rng: &mut ChaCha8Rng) -> T {
        let z = loop {
            let z: f64 = rng.sample(StandardNormal);
            if self.distribution == VariationDistribution::Lognormal || z.abs() <= TRUNCATION_SIGMAS {
                break z;
            }
        };
        let m = match self.distribution {
            VariationDistribution::NormalTruncated => (1.0 + rel_sigma * z).max(0.0),
            VariationDistribution::Lognormal => (rel_sigma * z).exp(),
        };
        T::lit(m)
    }

    fn draw_stream<T: Scalar>(&self, seed: u64, stream: u64, rel_sigma: f64, n: usize) -> Vec<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        (0..n).map(|_| self.multiplier(rel_sigma, &mut rng)).collect()
    }

    /// Draws multipliers for `arrays` cell blocks of `side × side` cells and a
    /// `width × height` sensor plane.
    pub fn sample<T: Scalar>(
        &self,
        seed: u64,
        side: usize,
        arrays: usize,
        width: usize,
        height: usize,
    ) -> Result<VariationSample<T>> {
        self.validate()?;
        if arrays == 0 || side == 0 {
            return Err(Error::param("variation sample needs at least one cell"));
        }
        let cells = side * side;
        let arrays = (0..arrays as u64)
            .map(|k| CellVariation {
                gamma_mult: self.draw_stream(seed, 2 * k, self.gamma_rel_sigma, cells),
                gain_mult: self.draw_stream(seed, 2 * k + 1, self.gain_rel_sigma, cells),
            })
            .collect();
        Ok(VariationSample {
            seed,
            side,
            width,
            height,
            arrays,
            sensor_mult: self.draw_stream(seed, SENSOR_STREAM, self.sensor_rel_sigma, width * height),
        })
    }
}

/// Per-cell multipliers of one physical filter block, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CellVariation<T> {
    pub gamma_mult: Vec<T>,
    pub gain_mult: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariationSample<T> {
    pub seed: u64,
    pub side: usize,
    pub width: usize,
    pub height: usize,
    arrays: Vec<CellVariation<T>>,
    /// Per-pixel photocurrent multipliers, row-major.
    pub sensor_mult: Vec<T>,
}

impl<T: Scalar> VariationSample<T> {
    /// Sample with every multiplier equal to one.
    pub fn nominal(side: usize, width: usize, height: usize) -> Self {
        Self {
            seed: 0,
            side,
            width,
            height,
            arrays: vec![CellVariation { gamma_mult: vec![T::one(); side * side], gain_mult: vec![T::one(); side * side] }],
            sensor_mult: vec![T::one(); width * height],
        }
    }

    /// Cell block used for the given scale; a single shared block serves both.
    pub fn cells(&self, scale_index: usize) -> &CellVariation<T> {
        &self.arrays[scale_index.min(self.arrays.len() - 1)]
    }

    pub fn array_count(&self) -> usize {
        self.arrays.len()
    }

    pub fn sensor(&self, x: usize, y: usize) -> T {
        self.sensor_mult[y * self.width + x]
    }

    pub fn all_multipliers(&self) -> impl Iterator<Item = T> + '_ {
        self.arrays
            .iter()
            .flat_map(|a| a.gamma_mult.iter().chain(&a.gain_mult))
            .chain(&self.sensor_mult)
            .copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_sigma_gives_unit_multipliers() {
        for dist in [VariationDistribution::NormalTruncated, VariationDistribution::Lognormal] {
            let m = VariationModel { distribution: dist, ..VariationModel::none() };
            let s: VariationSample<f64> = m.sample(42, 3, 2, 28, 28).unwrap();
            assert!(s.all_multipliers().all(|v| v == 1.0));
        }
    }

    #[test]
    fn same_seed_same_sample() {
        let m = VariationModel::uniform(0.1);
        let a: VariationSample<f64> = m.sample(7, 3, 1, 10, 8).unwrap();
        let b: VariationSample<f64> = m.sample(7, 3, 1, 10, 8).unwrap();
        assert_eq!(a, b);
        let c: VariationSample<f64> = m.sample(8, 3, 1, 10, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn cell_draws_do_not_depend_on_image_size() {
        let m = VariationModel::uniform(0.1);
        let a: VariationSample<f64> = m.sample(7, 3, 1, 10, 8).unwrap();
        let b: VariationSample<f64> = m.sample(7, 3, 1, 28, 28).unwrap();
        assert_eq!(a.cells(0), b.cells(0));
    }

    #[test]
    fn truncation_holds() {
        let m = VariationModel::uniform(0.2);
        let s: VariationSample<f64> = m.sample(3, 3, 1, 100, 100).unwrap();
        let bound = 0.2 * TRUNCATION_SIGMAS + 1e-12;
        assert!(s.all_multipliers().all(|v| (v - 1.0).abs() <= bound));
    }

    #[test]
    fn sample_moments_are_plausible() {
        let m = VariationModel { sensor_rel_sigma: 0.1, ..VariationModel::none() };
        let s: VariationSample<f64> = m.sample(11, 1, 1, 200, 200).unwrap();
        let n = s.sensor_mult.len() as f64;
        let mean = s.sensor_mult.iter().sum::<f64>() / n;
        let var = s.sensor_mult.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((mean - 1.0).abs() < 0.005);
        assert!((var.sqrt() - 0.1).abs() < 0.005);
    }

    #[test]
    fn shared_block_serves_both_scales() {
        let m = VariationModel::uniform(0.1);
        let s: VariationSample<f64> = m.sample(1, 3, 1, 5, 5).unwrap();
        assert_eq!(s.cells(0), s.cells(1));
        let s: VariationSample<f64> = m.sample(1, 3, 2, 5, 5).unwrap();
        assert_ne!(s.cells(0), s.cells(1));
    }

    #[test]
    fn negative_sigma_rejected() {
        let m = VariationModel { gain_rel_sigma: -0.1, ..VariationModel::none() };
        assert!(m.sample::<f64>(1, 3, 1, 5, 5).is_err());
    }
}
