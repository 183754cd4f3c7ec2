//! Run configuration: embedded defaults, an optional flat TOML file, and
//! command-line overrides, applied in that order.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use flexdog_core::adc::AdcSpec;
use flexdog_core::cell::{CellModel, CellParams, SigmoidProductParams};
use flexdog_core::dog::{GaussianKernel, DEFAULT_SIGMA1, DEFAULT_SIGMA_RATIO};
use flexdog_core::perf::{PerfSpec, PixelCountMode, PowerAccounting};
use flexdog_core::pipeline::{AnalogConfig, DEFAULT_EDGE_THRESHOLD_LSB, DEFAULT_TRANSIMPEDANCE};
use flexdog_core::variation::{VariationDistribution, VariationModel};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Ideal,
    Sigmoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DistributionKind {
    Normal,
    Lognormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PixelMode {
    Full,
    Valid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// `pattern:<name>` or a path to an IDX or PGM file.
    pub input: String,
    pub index: usize,
    pub pattern_size: usize,
    /// `None` disables binarization.
    pub binarize_threshold: Option<f64>,
    pub sigma1: f64,
    pub sigma_ratio: f64,
    pub half_width: usize,
    pub model: ModelKind,
    pub gamma: f64,
    pub i_in: f64,
    pub steepness: f64,
    pub half_separation: f64,
    pub variation_gamma: f64,
    pub variation_gain: f64,
    pub variation_sensor: f64,
    pub distribution: DistributionKind,
    pub shared_array: bool,
    pub bits: u32,
    /// `None` picks the largest possible node voltage.
    pub vref: Option<f64>,
    pub t_conv: f64,
    pub transimpedance: f64,
    pub settle_time: f64,
    pub settling_error: bool,
    pub edge_threshold_lsb: i32,
    pub supply_v: f64,
    pub parallelism: usize,
    pub pixel_mode: PixelMode,
    pub adc_separate: bool,
    pub parallel_power: bool,
    pub scales_concurrent: bool,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let cell = CellParams::<f64>::default();
        let sp = SigmoidProductParams::<f64>::default();
        let perf = PerfSpec::<f64>::default();
        let adc = AdcSpec::<f64>::default();
        Self {
            input: "pattern:ring".into(),
            index: 0,
            pattern_size: 28,
            binarize_threshold: Some(0.5),
            sigma1: DEFAULT_SIGMA1,
            sigma_ratio: DEFAULT_SIGMA_RATIO,
            half_width: 1,
            model: ModelKind::Ideal,
            gamma: cell.gamma,
            i_in: cell.i_in_nominal,
            steepness: sp.steepness,
            half_separation: sp.half_separation,
            variation_gamma: 0.0,
            variation_gain: 0.0,
            variation_sensor: 0.0,
            distribution: DistributionKind::Normal,
            shared_array: true,
            bits: adc.bits,
            vref: None,
            t_conv: adc.t_conv,
            transimpedance: DEFAULT_TRANSIMPEDANCE,
            settle_time: perf.settle_time,
            settling_error: false,
            edge_threshold_lsb: DEFAULT_EDGE_THRESHOLD_LSB,
            supply_v: perf.supply_v,
            parallelism: perf.parallelism,
            pixel_mode: PixelMode::Full,
            adc_separate: false,
            parallel_power: false,
            scales_concurrent: false,
            seed: 0,
            out_dir: PathBuf::from("flexdog-out"),
        }
    }
}

/// Command-line overrides shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// Flat TOML file with RunConfig keys; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Image index inside an IDX file.
    #[arg(long)]
    pub index: Option<usize>,
    /// Side length of built-in patterns.
    #[arg(long)]
    pub pattern_size: Option<usize>,
    /// Binarization threshold in [0, 1].
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Keep grayscale input.
    #[arg(long)]
    pub no_binarize: bool,
    #[arg(long)]
    pub sigma1: Option<f64>,
    #[arg(long)]
    pub sigma_ratio: Option<f64>,
    #[arg(long)]
    pub half_width: Option<usize>,
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    /// Cell curvature, 1/V².
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Fit gamma from a two-column `dv i_out` measurement file.
    #[arg(long)]
    pub calibrate_from: Option<PathBuf>,
    /// Nominal input current, amperes.
    #[arg(long)]
    pub i_in: Option<f64>,
    #[arg(long)]
    pub steepness: Option<f64>,
    #[arg(long)]
    pub half_separation: Option<f64>,
    #[arg(long)]
    pub variation_gamma: Option<f64>,
    #[arg(long)]
    pub variation_gain: Option<f64>,
    #[arg(long)]
    pub variation_sensor: Option<f64>,
    #[arg(long, value_enum)]
    pub distribution: Option<DistributionKind>,
    /// Program each scale on its own physical array.
    #[arg(long)]
    pub independent_arrays: bool,
    #[arg(long)]
    pub bits: Option<u32>,
    /// ADC full scale, volts (default: largest node voltage).
    #[arg(long)]
    pub vref: Option<f64>,
    #[arg(long)]
    pub transimpedance: Option<f64>,
    #[arg(long)]
    pub settle_time: Option<f64>,
    #[arg(long)]
    pub settling_error: bool,
    #[arg(long)]
    pub edge_threshold: Option<i32>,
    #[arg(long)]
    pub supply_v: Option<f64>,
    #[arg(long)]
    pub parallelism: Option<usize>,
    #[arg(long, value_enum)]
    pub pixel_mode: Option<PixelMode>,
    #[arg(long)]
    pub adc_separate: bool,
    /// Multiply power by the parallelism.
    #[arg(long)]
    pub parallel_power: bool,
    #[arg(long)]
    pub scales_concurrent: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Defaults, then the config file, then flags.
    pub fn resolve(input: Option<String>, args: &ConfigArgs) -> Result<Self> {
        let mut cfg = match &args.config {
            Some(path) => Self::load(path)?,
            None => Self::default(),
        };
        cfg.apply(input, args)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, input: Option<String>, a: &ConfigArgs) -> Result<()> {
        set(&mut self.input, input);
        set(&mut self.index, a.index);
        set(&mut self.pattern_size, a.pattern_size);
        if a.threshold.is_some() {
            self.binarize_threshold = a.threshold;
        }
        if a.no_binarize {
            self.binarize_threshold = None;
        }
        set(&mut self.sigma1, a.sigma1);
        set(&mut self.sigma_ratio, a.sigma_ratio);
        set(&mut self.half_width, a.half_width);
        set(&mut self.model, a.model);
        set(&mut self.gamma, a.gamma);
        set(&mut self.i_in, a.i_in);
        set(&mut self.steepness, a.steepness);
        set(&mut self.half_separation, a.half_separation);
        set(&mut self.variation_gamma, a.variation_gamma);
        set(&mut self.variation_gain, a.variation_gain);
        set(&mut self.variation_sensor, a.variation_sensor);
        set(&mut self.distribution, a.distribution);
        self.shared_array &= !a.independent_arrays;
        set(&mut self.bits, a.bits);
        if a.vref.is_some() {
            self.vref = a.vref;
        }
        set(&mut self.transimpedance, a.transimpedance);
        set(&mut self.settle_time, a.settle_time);
        self.settling_error |= a.settling_error;
        set(&mut self.edge_threshold_lsb, a.edge_threshold);
        set(&mut self.supply_v, a.supply_v);
        set(&mut self.parallelism, a.parallelism);
        set(&mut self.pixel_mode, a.pixel_mode);
        self.adc_separate |= a.adc_separate;
        self.parallel_power |= a.parallel_power;
        self.scales_concurrent |= a.scales_concurrent;
        set(&mut self.seed, a.seed);
        set(&mut self.out_dir, a.out_dir.clone());
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if let Some(t) = self.binarize_threshold {
            if !(0.0..=1.0).contains(&t) {
                return bad(format!("threshold {t} outside [0, 1]"));
            }
        }
        if !(self.sigma1 > 0.0) {
            return bad(format!("sigma1 must be positive, got {}", self.sigma1));
        }
        if !(self.sigma_ratio > 1.0) {
            return bad(format!("sigma ratio must exceed 1, got {}", self.sigma_ratio));
        }
        if self.half_width == 0 {
            return bad("half width must be at least 1".into());
        }
        if self.pattern_size < 2 * self.half_width + 1 {
            return bad(format!("pattern size {} smaller than the kernel", self.pattern_size));
        }
        self.analog_config().validate()?;
        if let Some(v) = self.vref {
            AdcSpec { bits: self.bits, vref: v, t_conv: self.t_conv }.validate()?;
        }
        Ok(())
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma1 * self.sigma_ratio
    }

    pub fn kernels(&self) -> Result<(GaussianKernel<f64>, GaussianKernel<f64>)> {
        Ok((
            GaussianKernel::new(self.sigma1, self.half_width, true)?,
            GaussianKernel::new(self.sigma2(), self.half_width, true)?,
        ))
    }

    pub fn cell_params(&self) -> CellParams<f64> {
        let model = match self.model {
            ModelKind::Ideal => CellModel::IdealExponential,
            ModelKind::Sigmoid => CellModel::SigmoidProduct(SigmoidProductParams {
                steepness: self.steepness,
                half_separation: self.half_separation,
            }),
        };
        CellParams { gamma: self.gamma, i_in_nominal: self.i_in, model }
    }

    pub fn variation(&self) -> VariationModel {
        VariationModel {
            gamma_rel_sigma: self.variation_gamma,
            gain_rel_sigma: self.variation_gain,
            sensor_rel_sigma: self.variation_sensor,
            distribution: match self.distribution {
                DistributionKind::Normal => VariationDistribution::NormalTruncated,
                DistributionKind::Lognormal => VariationDistribution::Lognormal,
            },
        }
    }

    pub fn perf_spec(&self) -> PerfSpec<f64> {
        PerfSpec {
            supply_v: self.supply_v,
            node_current: self.i_in,
            settle_time: self.settle_time,
            adc_time: self.t_conv,
            parallelism: self.parallelism,
            pixel_count_mode: match self.pixel_mode {
                PixelMode::Full => PixelCountMode::FullMn,
                PixelMode::Valid => PixelCountMode::ValidOnly,
            },
            adc_separate: self.adc_separate,
            power_accounting: if self.parallel_power {
                PowerAccounting::ParallelBlocks
            } else {
                PowerAccounting::Paper
            },
            scales_concurrent: self.scales_concurrent,
            ..PerfSpec::for_half_width(self.half_width)
        }
    }

    pub fn analog_config(&self) -> AnalogConfig<f64> {
        AnalogConfig {
            cell_params: self.cell_params(),
            variation: self.variation(),
            adc: AdcSpec { bits: self.bits, vref: self.vref.unwrap_or(1.0), t_conv: self.t_conv },
            auto_vref: self.vref.is_none(),
            transimpedance: self.transimpedance,
            perf: self.perf_spec(),
            shared_array: self.shared_array,
            settling_error: self.settling_error,
            edge_threshold_lsb: self.edge_threshold_lsb,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        RunConfig::default().validate().unwrap();
        let cfg = RunConfig::default();
        assert_eq!(cfg.perf_spec(), PerfSpec::default());
        assert_eq!(cfg.analog_config(), AnalogConfig::default());
    }

    #[test]
    fn file_then_flags() {
        let file = RunConfig::from_toml("sigma1 = 0.9\nseed = 4\nbits = 10\n").unwrap();
        assert_eq!((file.sigma1, file.seed, file.bits), (0.9, 4, 10));
        let mut cfg = file;
        let args = ConfigArgs { seed: Some(9), no_binarize: true, ..ConfigArgs::default() };
        cfg.apply(None, &args).unwrap();
        assert_eq!((cfg.sigma1, cfg.seed), (0.9, 9));
        assert_eq!(cfg.binarize_threshold, None);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(matches!(RunConfig::from_toml("sigma_one = 1.0"), Err(CliError::Config(_))));
        let cfg = RunConfig { sigma_ratio: 1.0, ..RunConfig::default() };
        assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
        let cfg = RunConfig { binarize_threshold: Some(1.5), ..RunConfig::default() };
        assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
        let cfg = RunConfig { bits: 0, ..RunConfig::default() };
        assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
    }
}
