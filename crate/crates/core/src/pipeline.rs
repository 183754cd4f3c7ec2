//! Analog signal chain: photocurrents, programmed Gaussian cells summed on a
//! shared wire, transimpedance conversion, ADC, and digital subtraction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adc::{quantize, AdcSpec};
use crate::cell::{cell_response_varied, program_kernel, CellParams, ProgrammedKernel};
use crate::dog::{dog, DogImage, GaussianKernel, IntensityImage};
use crate::error::{Error, Result};
use crate::perf::{breakdown, PerfSpec, SimReport};
use crate::plane::Plane;
use crate::scalar::Scalar;
use crate::variation::{VariationModel, VariationSample};

/// Transimpedance mapping 50 nA to 0.5 V.
pub const DEFAULT_TRANSIMPEDANCE: f64 = 10e6;
/// Codes with magnitude at least this many LSB count as edge pixels.
pub const DEFAULT_EDGE_THRESHOLD_LSB: i32 = 2;
/// Settling time constant as a fraction of the settle time.
pub const SETTLING_TIME_CONSTANTS: f64 = 7.0;

#[derive(Debug, Clone, PartialEq)]
pub struct CurrentFrame<T> {
    pub currents: Plane<T>,
}

impl<T: Scalar> CurrentFrame<T> {
    pub fn new(currents: Plane<T>) -> Result<Self> {
        if currents.iter().any(|c| !(*c >= T::zero())) {
            return Err(Error::InvalidInput("currents must be nonnegative".into()));
        }
        Ok(Self { currents })
    }

    pub fn width(&self) -> usize {
        self.currents.width()
    }

    pub fn height(&self) -> usize {
        self.currents.height()
    }
}

/// ADC output grid. Single conversions hold `[0, 2^bits - 1]`; subtracted
/// frames hold `[-(2^bits - 1), 2^bits - 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeFrame {
    pub codes: Plane<i32>,
    pub bits: u32,
    pub signed: bool,
}

impl CodeFrame {
    pub fn width(&self) -> usize {
        self.codes.width()
    }

    pub fn height(&self) -> usize {
        self.codes.height()
    }

    pub fn max_code(&self) -> i32 {
        ((1u64 << self.bits) - 1) as i32
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalogConfig<T> {
    pub cell_params: CellParams<T>,
    pub variation: VariationModel,
    pub adc: AdcSpec<T>,
    /// Replace `adc.vref` by the largest possible node voltage.
    pub auto_vref: bool,
    /// Current-to-voltage gain, ohms.
    pub transimpedance: T,
    /// Timing and power figures; `perf.settle_time` is the circuit settling time.
    pub perf: PerfSpec<T>,
    /// Both scales share one physically reprogrammed array.
    pub shared_array: bool,
    /// Apply the incomplete-settling factor `1 - exp(-t/τ)`, `τ = t/7`.
    pub settling_error: bool,
    pub edge_threshold_lsb: i32,
}

impl<T: Scalar> Default for AnalogConfig<T> {
    fn default() -> Self {
        Self::for_half_width(1)
    }
}

impl<T: Scalar> AnalogConfig<T> {
    pub fn for_half_width(half_width: usize) -> Self {
        Self {
            cell_params: CellParams::default(),
            variation: VariationModel::none(),
            adc: AdcSpec::default(),
            auto_vref: true,
            transimpedance: T::lit(DEFAULT_TRANSIMPEDANCE),
            perf: PerfSpec::for_half_width(half_width),
            shared_array: true,
            settling_error: false,
            edge_threshold_lsb: DEFAULT_EDGE_THRESHOLD_LSB,
        }
    }

    pub fn settle_time(&self) -> T {
        self.perf.settle_time
    }

    pub fn validate(&self) -> Result<()> {
        self.cell_params.validate()?;
        self.variation.validate()?;
        self.perf.validate()?;
        if !(self.transimpedance > T::zero()) || !self.transimpedance.is_finite() {
            return Err(Error::param(format!("transimpedance must be positive, got {}", self.transimpedance)));
        }
        if !self.auto_vref {
            self.adc.validate()?;
        } else {
            AdcSpec { vref: T::one(), ..self.adc }.validate()?;
        }
        if self.edge_threshold_lsb < 1 {
            return Err(Error::param("edge threshold must be at least 1 LSB"));
        }
        Ok(())
    }
}

/// Photocurrent of each pixel: `pixel · I_nominal · sensor multiplier`.
pub fn sense<T: Scalar>(image: &IntensityImage<T>, i_in_nominal: T, sample: &VariationSample<T>) -> Result<CurrentFrame<T>> {
    if sample.width != image.width() || sample.height != image.height() {
        return Err(Error::dim(format!(
            "variation sample is {}x{}, image is {}x{}",
            sample.width,
            sample.height,
            image.width(),
            image.height()
        )));
    }
    CurrentFrame::new(Plane::from_fn(image.width(), image.height(), |x, y| {
        image.get(x, y) * i_in_nominal * sample.sensor(x, y)
    })?)
}

/// Kirchhoff sum of the programmed cells over every valid window.
///
/// Cells are visited in row-major order so the floating point sum is
/// reproducible. `scale_index` selects the cell block when the two scales
/// live on separate arrays.
pub fn analog_convolve<T: Scalar>(
    frame: &CurrentFrame<T>,
    pk: &ProgrammedKernel<T>,
    sample: &VariationSample<T>,
    scale_index: usize,
) -> Result<CurrentFrame<T>> {
    let side = pk.side();
    if frame.width() < side || frame.height() < side {
        return Err(Error::dim(format!(
            "frame {}x{} smaller than {side}x{side} kernel",
            frame.width(),
            frame.height()
        )));
    }
    if sample.side != side {
        return Err(Error::dim(format!("variation sample has {0}x{0} cells, kernel needs {side}x{side}", sample.side)));
    }
    let cells = sample.cells(scale_index);
    let mut out = Vec::with_capacity((frame.width() + 1 - side) * (frame.height() + 1 - side));
    for y in 0..=frame.height() - side {
        for x in 0..=frame.width() - side {
            let mut acc = T::zero();
            for ky in 0..side {
                for kx in 0..side {
                    let c = ky * side + kx;
                    let i_in = frame.currents.get(x + kx, y + ky);
                    let i_out = cell_response_varied(i_in, pk.dv_grid[c], &pk.params, cells.gamma_mult[c])?;
                    acc = acc + cells.gain_mult[c] * i_out;
                }
            }
            out.push(acc);
        }
    }
    CurrentFrame::new(Plane::new(frame.width() + 1 - side, frame.height() + 1 - side, out)?)
}

pub fn to_voltage<T: Scalar>(frame: &CurrentFrame<T>, transimpedance: T) -> Plane<T> {
    frame.currents.scale(transimpedance)
}

/// Node voltages of both scales before conversion.
#[derive(Debug, Clone)]
pub struct AnalogDog<T> {
    pub v1: Plane<T>,
    pub v2: Plane<T>,
    pub pk1: ProgrammedKernel<T>,
    pub pk2: ProgrammedKernel<T>,
    pub sample: VariationSample<T>,
    /// Full-scale voltage the ADC uses for this run.
    pub vref: T,
    pub i_in_nominal: T,
    pub transimpedance: T,
}

impl<T: Scalar> AnalogDog<T> {
    /// Voltages divided by `s·I·R` per scale and subtracted, in intensity
    /// units comparable with the digital DoG. Bypasses the ADC.
    pub fn descaled(&self) -> Plane<T> {
        let d1 = self.pk1.scale * self.i_in_nominal * self.transimpedance;
        let d2 = self.pk2.scale * self.i_in_nominal * self.transimpedance;
        self.v1.zip_with(&self.v2, |a, b| a / d1 - b / d2).expect("equal shapes")
    }

    pub fn scale_compensation(&self) -> [T; 2] {
        let s_min = self.pk1.scale.min(self.pk2.scale);
        [s_min / self.pk1.scale, s_min / self.pk2.scale]
    }

    /// Oracle values in final code units.
    pub fn code_units_per_intensity(&self, adc_bits: u32) -> T {
        let s_min = self.pk1.scale.min(self.pk2.scale);
        let max_code = T::lit(((1u64 << adc_bits) - 1) as f64);
        self.i_in_nominal * self.transimpedance * s_min * max_code / self.vref
    }
}

fn check_kernels<T: Scalar>(k1: &GaussianKernel<T>, k2: &GaussianKernel<T>) -> Result<()> {
    if k1.half_width() != k2.half_width() {
        return Err(Error::config(format!(
            "kernel half widths differ: {} vs {}",
            k1.half_width(),
            k2.half_width()
        )));
    }
    if !(k1.sigma() < k2.sigma()) {
        return Err(Error::config(format!("sigma1 ({}) must be below sigma2 ({})", k1.sigma(), k2.sigma())));
    }
    Ok(())
}

/// Runs the analog half of the chain for both scales.
pub fn run_dog_analog<T: Scalar>(
    image: &IntensityImage<T>,
    k1: &GaussianKernel<T>,
    k2: &GaussianKernel<T>,
    cfg: &AnalogConfig<T>,
    seed: u64,
) -> Result<AnalogDog<T>> {
    cfg.validate()?;
    check_kernels(k1, k2)?;
    let pk1 = program_kernel(k1, &cfg.cell_params)?;
    let pk2 = program_kernel(k2, &cfg.cell_params)?;
    let arrays = if cfg.shared_array { 1 } else { 2 };
    let sample = cfg.variation.sample(seed, pk1.side(), arrays, image.width(), image.height())?;
    let i_in = cfg.cell_params.i_in_nominal;
    let frame = sense(image, i_in, &sample)?;
    let settle = if cfg.settling_error {
        T::one() - (-T::lit(SETTLING_TIME_CONSTANTS)).exp()
    } else {
        T::one()
    };
    let r = cfg.transimpedance;
    let v1 = to_voltage(&analog_convolve(&frame, &pk1, &sample, 0)?, r).scale(settle);
    let v2 = to_voltage(&analog_convolve(&frame, &pk2, &sample, 1)?, r).scale(settle);
    // a fully bright window drives the node to I·R·Σ(s·w)
    let vref = if cfg.auto_vref {
        i_in * r * pk1.gain_sum().max(pk2.gain_sum())
    } else {
        cfg.adc.vref
    };
    Ok(AnalogDog { v1, v2, pk1, pk2, sample, vref, i_in_nominal: i_in, transimpedance: r })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    /// Mean `|code - oracle|` in code units.
    pub mean_abs_error: f64,
    pub max_abs_error: f64,
    /// Fraction of pixels whose edge flag differs from the oracle's.
    pub edge_flip_rate: f64,
    pub edge_pixels: usize,
    pub oracle_edge_pixels: usize,
    /// Fraction of edge pixels within one pixel of an oracle edge; `None`
    /// when the analog output has no edges.
    pub edge_localization: Option<f64>,
    pub edge_threshold_lsb: i32,
}

/// `|value| >= threshold`.
pub fn edge_map<T: Scalar>(values: &Plane<T>, threshold: T) -> Plane<bool> {
    values.map(|v| v.abs() >= threshold)
}

/// Whether `map` has a set pixel within Chebyshev distance `radius` of `(x, y)`.
pub fn near_edge(map: &Plane<bool>, x: usize, y: usize, radius: usize) -> bool {
    let x0 = x.saturating_sub(radius);
    let y0 = y.saturating_sub(radius);
    let x1 = (x + radius).min(map.width() - 1);
    let y1 = (y + radius).min(map.height() - 1);
    (y0..=y1).any(|yy| (x0..=x1).any(|xx| map.get(xx, yy)))
}

pub fn error_metrics<T: Scalar>(codes: &CodeFrame, oracle_codes: &Plane<T>, threshold_lsb: i32) -> Result<ErrorMetrics> {
    let as_real = codes.codes.map(|c| T::lit(c as f64));
    let diff = as_real.zip_with(oracle_codes, |a, b| (a - b).abs())?;
    let n = T::count(diff.len());
    let mean = diff.iter().fold(T::zero(), |a, &d| a + d) / n;
    let thr = T::lit(threshold_lsb as f64);
    let analog_edges = edge_map(&as_real, thr);
    let oracle_edges = edge_map(oracle_codes, thr);
    let flips = analog_edges.zip_with(&oracle_edges, |a, b| a != b)?.iter().filter(|f| **f).count();
    let edge_pixels = analog_edges.iter().filter(|e| **e).count();
    let mut localized = 0usize;
    for y in 0..analog_edges.height() {
        for x in 0..analog_edges.width() {
            if analog_edges.get(x, y) && near_edge(&oracle_edges, x, y, 1) {
                localized += 1;
            }
        }
    }
    Ok(ErrorMetrics {
        mean_abs_error: mean.as_f64(),
        max_abs_error: diff.max_abs().as_f64(),
        edge_flip_rate: flips as f64 / diff.len() as f64,
        edge_pixels,
        oracle_edge_pixels: oracle_edges.iter().filter(|e| **e).count(),
        edge_localization: (edge_pixels > 0).then(|| localized as f64 / edge_pixels as f64),
        edge_threshold_lsb: threshold_lsb,
    })
}

/// Every intermediate product of one pipeline run.
#[derive(Debug, Clone)]
pub struct PipelineRun<T> {
    /// Signed, scale-compensated DoG codes.
    pub codes: CodeFrame,
    /// Raw conversions of the two scales.
    pub scale_codes: [CodeFrame; 2],
    pub oracle: DogImage<T>,
    /// Oracle DoG expressed in code units.
    pub oracle_codes: Plane<T>,
    pub report: SimReport,
}

pub fn run_dog_pipeline_detailed<T: Scalar>(
    image: &IntensityImage<T>,
    k1: &GaussianKernel<T>,
    k2: &GaussianKernel<T>,
    cfg: &AnalogConfig<T>,
    seed: u64,
) -> Result<PipelineRun<T>> {
    let analog = run_dog_analog(image, k1, k2, cfg, seed)?;
    let adc = AdcSpec { vref: analog.vref, ..cfg.adc };
    adc.validate()?;
    let mut saturation_count = 0usize;
    let mut convert = |v: &Plane<T>| -> CodeFrame {
        let codes = v.map(|x| {
            let c = quantize(x, &adc);
            saturation_count += usize::from(c.saturated);
            c.code
        });
        CodeFrame { codes, bits: adc.bits, signed: false }
    };
    let q1 = convert(&analog.v1);
    let q2 = convert(&analog.v2);

    let [c1, c2] = analog.scale_compensation();
    let max_code = adc.max_code();
    let diff = q1.codes.zip_with(&q2.codes, |a, b| {
        let d = T::lit(a as f64) * c1 - T::lit(b as f64) * c2;
        d.round().to_i32().expect("bounded").clamp(-max_code, max_code)
    })?;
    let codes = CodeFrame { codes: diff, bits: adc.bits, signed: true };

    let oracle = dog(image, k1, k2)?;
    let oracle_codes = oracle.values.scale(analog.code_units_per_intensity(adc.bits));
    let errors = error_metrics(&codes, &oracle_codes, cfg.edge_threshold_lsb)?;
    let perf = breakdown(image.width(), image.height(), &cfg.perf)?;
    let report = SimReport::new(
        perf,
        errors,
        saturation_count,
        [c1.as_f64(), c2.as_f64()],
        [analog.pk1.scale.as_f64(), analog.pk2.scale.as_f64()],
        analog.vref.as_f64(),
        adc.bits,
        seed,
    );
    Ok(PipelineRun { codes, scale_codes: [q1, q2], oracle, oracle_codes, report })
}

/// Full chain: sense, convolve at both scales, convert, subtract.
pub fn run_dog_pipeline<T: Scalar>(
    image: &IntensityImage<T>,
    k1: &GaussianKernel<T>,
    k2: &GaussianKernel<T>,
    cfg: &AnalogConfig<T>,
    seed: u64,
) -> Result<(CodeFrame, SimReport)> {
    let run = run_dog_pipeline_detailed(image, k1, k2, cfg, seed)?;
    Ok((run.codes, run.report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    pub trial: usize,
    pub seed: u64,
    pub mean_abs_error: f64,
    pub max_abs_error: f64,
    pub edge_flip_rate: f64,
    pub saturation_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub n_trials: usize,
    pub base_seed: u64,
    pub mean_mae: f64,
    /// Sample standard deviation of the per-trial MAE; zero for one trial.
    pub std_mae: f64,
    pub max_mae: f64,
    /// Half width of the normal-approximation 95% interval on `mean_mae`.
    pub ci95_half_width: f64,
    pub mean_flip_rate: f64,
    pub trials: Vec<TrialMetrics>,
}

impl MonteCarloSummary {
    pub fn ci95(&self) -> (f64, f64) {
        (self.mean_mae - self.ci95_half_width, self.mean_mae + self.ci95_half_width)
    }
}

/// Runs trials with seeds `base_seed .. base_seed + n_trials` in parallel.
///
/// Trials are collected in index order before reduction, so the summary is
/// independent of the thread count.
pub fn monte_carlo<T: Scalar>(
    image: &IntensityImage<T>,
    k1: &GaussianKernel<T>,
    k2: &GaussianKernel<T>,
    cfg: &AnalogConfig<T>,
    n_trials: usize,
    base_seed: u64,
) -> Result<MonteCarloSummary> {
    if n_trials == 0 {
        return Err(Error::config("monte carlo needs at least one trial"));
    }
    let trials = (0..n_trials)
        .into_par_iter()
        .map(|trial| {
            let seed = base_seed.wrapping_add(trial as u64);
            let (_, report) = run_dog_pipeline(image, k1, k2, cfg, seed)?;
            Ok(TrialMetrics {
                trial,
                seed,
                mean_abs_error: report.errors.mean_abs_error,
                max_abs_error: report.errors.max_abs_error,
                edge_flip_rate: report.errors.edge_flip_rate,
                saturation_count: report.saturation_count,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let n = n_trials as f64;
    let mean_mae = trials.iter().map(|t| t.mean_abs_error).sum::<f64>() / n;
    let std_mae = if n_trials > 1 {
        (trials.iter().map(|t| (t.mean_abs_error - mean_mae).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(MonteCarloSummary {
        n_trials,
        base_seed,
        mean_mae,
        std_mae,
        max_mae: trials.iter().map(|t| t.mean_abs_error).fold(0.0, f64::max),
        ci95_half_width: 1.96 * std_mae / n.sqrt(),
        mean_flip_rate: trials.iter().map(|t| t.edge_flip_rate).sum::<f64>() / n,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell::{cell_response, CellParams};

    fn kernels() -> (GaussianKernel<f64>, GaussianKernel<f64>) {
        (
            GaussianKernel::<f64>::new(0.85, 1, true).unwrap(),
            GaussianKernel::<f64>::new(0.85 * std::f64::consts::SQRT_2, 1, true).unwrap(),
        )
    }

    #[test]
    fn sense_examples() {
        let nominal = VariationSample::<f64>::nominal(3, 4, 3);
        let ones = IntensityImage::<f64>::constant(4, 3, 1.0).unwrap();
        let f = sense(&ones, 100e-9, &nominal).unwrap();
        assert!(f.currents.iter().all(|c| *c == 100e-9));
        let zeros = IntensityImage::<f64>::constant(4, 3, 0.0).unwrap();
        assert!(sense(&zeros, 100e-9, &nominal).unwrap().currents.iter().all(|c| *c == 0.0));
        let wrong = VariationSample::<f64>::nominal(3, 5, 3);
        assert!(matches!(sense(&ones, 100e-9, &wrong), Err(Error::Dimension(_))));
    }

    #[test]
    fn single_bright_pixel_flat_kernel() {
        let mut px = vec![0.0; 9];
        px[4] = 1.0;
        let img = IntensityImage::<f64>::new(3, 3, px).unwrap();
        let flat = GaussianKernel::<f64>::from_weights(1.0, 1, vec![1.0; 9]).unwrap();
        let params = CellParams::<f64>::default();
        let pk = program_kernel(&flat, &params).unwrap();
        let sample = VariationSample::nominal(3, 3, 3);
        let frame = sense(&img, 100e-9, &sample).unwrap();
        let out = analog_convolve(&frame, &pk, &sample, 0).unwrap();
        assert_eq!(out.currents.len(), 1);
        assert_eq!(out.currents.get(0, 0), cell_response(100e-9, 0.0, &params).unwrap());
        assert_eq!(out.currents.get(0, 0), 50e-9);
    }

    #[test]
    fn zero_frame_gives_zero() {
        let (k1, _) = kernels();
        let pk = program_kernel(&k1, &CellParams::<f64>::default()).unwrap();
        let sample = VariationSample::nominal(3, 6, 5);
        let frame = CurrentFrame::new(Plane::<f64>::filled(6, 5, 0.0).unwrap()).unwrap();
        let out = analog_convolve(&frame, &pk, &sample, 0).unwrap();
        assert!(out.currents.iter().all(|c| *c == 0.0));
    }

    #[test]
    fn analog_matches_digital_convolution() {
        let img = IntensityImage::<f64>::new(6, 5, (0..30).map(|i| (i % 7) as f64 / 6.0).collect()).unwrap();
        let (k1, _) = kernels();
        let params = CellParams::<f64>::default();
        let pk = program_kernel(&k1, &params).unwrap();
        let sample = VariationSample::nominal(3, 6, 5);
        let out = analog_convolve(&sense(&img, 100e-9, &sample).unwrap(), &pk, &sample, 0).unwrap();
        let digital = crate::dog::convolve_valid(&img, &k1).unwrap();
        let norm = pk.scale * 100e-9;
        for (a, d) in out.currents.iter().zip(digital.values.iter()) {
            assert!((a / norm - d).abs() <= 1e-9 * d.abs().max(1e-3));
        }
    }

    #[test]
    fn voltage_conversion() {
        let f = CurrentFrame::new(Plane::<f64>::new(2, 1, vec![50e-9, 0.0]).unwrap()).unwrap();
        let v = to_voltage(&f, 10e6);
        assert!((v.get(0, 0) - 0.5).abs() < 1e-15);
        assert_eq!(v.get(1, 0), 0.0);
        let f2 = CurrentFrame::new(f.currents.scale(2.0)).unwrap();
        assert_eq!(to_voltage(&f2, 10e6), v.scale(2.0));
    }

    #[test]
    fn constant_images_give_zero_codes() {
        let (k1, k2) = kernels();
        for value in [0.0, 1.0] {
            let img = IntensityImage::<f64>::constant(28, 28, value).unwrap();
            let (codes, report) = run_dog_pipeline(&img, &k1, &k2, &AnalogConfig::default(), 1).unwrap();
            assert!(codes.codes.iter().all(|c| *c == 0), "value {value}");
            assert_eq!(report.saturation_count, 0);
        }
    }

    #[test]
    fn pipeline_is_deterministic() {
        let (k1, k2) = kernels();
        let img = IntensityImage::<f64>::new(10, 10, (0..100).map(|i| ((i * 37) % 11) as f64 / 10.0).collect()).unwrap();
        let cfg = AnalogConfig { variation: VariationModel::uniform(0.1), ..AnalogConfig::default() };
        let a = run_dog_pipeline(&img, &k1, &k2, &cfg, 99).unwrap();
        let b = run_dog_pipeline(&img, &k1, &k2, &cfg, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn report_energy_is_consistent() {
        let (k1, k2) = kernels();
        let img = IntensityImage::<f64>::constant(28, 28, 1.0).unwrap();
        let (_, r) = run_dog_pipeline(&img, &k1, &k2, &AnalogConfig::default(), 0).unwrap();
        assert_eq!(r.energy_j, r.power_w * r.runtime_s);
        assert_eq!(r.energy_j, 1.16424e-9);
        assert!(r.realtime);
        assert!(r.scale_compensation[0] == 1.0 && r.scale_compensation[1] < 1.0);
    }

    #[test]
    fn saturation_counts_out_of_range_voltages() {
        let (k1, k2) = kernels();
        let img = IntensityImage::<f64>::constant(5, 5, 1.0).unwrap();
        let mut cfg = AnalogConfig::default();
        cfg.auto_vref = false;
        cfg.adc.vref = 0.1;
        let run = run_dog_pipeline_detailed(&img, &k1, &k2, &cfg, 0).unwrap();
        // 9 outputs per scale, every node exceeds 0.1 V
        assert_eq!(run.report.saturation_count, 18);
    }

    #[test]
    fn kernel_mismatch_is_configuration_error() {
        let img = IntensityImage::<f64>::constant(8, 8, 1.0).unwrap();
        let k1 = GaussianKernel::<f64>::new(0.85, 1, true).unwrap();
        let k2 = GaussianKernel::<f64>::new(1.2, 2, true).unwrap();
        assert!(matches!(
            run_dog_pipeline(&img, &k1, &k2, &AnalogConfig::default(), 0),
            Err(Error::Configuration(_))
        ));
        assert!(matches!(
            run_dog_pipeline(&img, &k2, &k1, &AnalogConfig::default(), 0),
            Err(Error::Configuration(_))
        ));
    }

    #[test]
    fn monte_carlo_without_variation_is_flat() {
        let (k1, k2) = kernels();
        let img = IntensityImage::<f64>::new(8, 8, (0..64).map(|i| (i / 4 % 2) as f64).collect()).unwrap();
        let s = monte_carlo(&img, &k1, &k2, &AnalogConfig::default(), 5, 10).unwrap();
        assert_eq!(s.std_mae, 0.0);
        assert!(s.trials.windows(2).all(|w| w[0].mean_abs_error == w[1].mean_abs_error));
        let one = monte_carlo(&img, &k1, &k2, &AnalogConfig::default(), 1, 10).unwrap();
        assert_eq!(one.mean_mae, one.trials[0].mean_abs_error);
        assert_eq!(one.max_mae, one.trials[0].mean_abs_error);
        assert!(monte_carlo(&img, &k1, &k2, &AnalogConfig::default(), 0, 10).is_err());
    }

    #[test]
    fn near_edge_window() {
        let mut m = Plane::filled(5, 5, false).unwrap();
        m[(2, 2)] = true;
        assert!(near_edge(&m, 1, 1, 1));
        assert!(near_edge(&m, 3, 3, 1));
        assert!(!near_edge(&m, 0, 0, 1));
        assert!(!near_edge(&m, 4, 2, 1));
    }
}
