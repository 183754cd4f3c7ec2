//! Gilbert Gaussian cell model.
//!
//! The ideal cell follows `I_out = (I_in / 2)·exp(-γ·ΔV²)`. A second, optional
//! model multiplies two logistic curves, which is how the physical circuit
//! produces its bell shape; it is only used to exercise the deviation
//! machinery and makes no claim of matching a real device.

use serde::{Deserialize, Serialize};

use crate::dog::GaussianKernel;
use crate::error::{Error, Result};
use crate::fit::{fit_gaussian, fit_log_gaussian};
use crate::scalar::Scalar;

/// Upper end of the validated ΔV window, in volts.
pub const VALIDITY_WINDOW_V: f64 = 1.3;
pub const DEFAULT_I_IN: f64 = 100e-9;
pub const DEFAULT_GAMMA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmoidProductParams<T> {
    /// Logistic slope κ/U_T, per volt.
    pub steepness: T,
    /// Half distance between the two logistic edges, volts.
    pub half_separation: T,
}

impl<T: Scalar> Default for SigmoidProductParams<T> {
    fn default() -> Self {
        Self { steepness: T::lit(10.0), half_separation: T::lit(0.4) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CellModel<T> {
    IdealExponential,
    SigmoidProduct(SigmoidProductParams<T>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellParams<T> {
    /// Curvature γ, per volt squared.
    pub gamma: T,
    /// Nominal input current, amperes.
    pub i_in_nominal: T,
    pub model: CellModel<T>,
}

impl<T: Scalar> Default for CellParams<T> {
    fn default() -> Self {
        Self {
            gamma: T::lit(DEFAULT_GAMMA),
            i_in_nominal: T::lit(DEFAULT_I_IN),
            model: CellModel::IdealExponential,
        }
    }
}

impl<T: Scalar> CellParams<T> {
    pub fn ideal(gamma: T) -> Self {
        Self { gamma, ..Self::default() }
    }

    pub fn sigmoid_product(params: SigmoidProductParams<T>) -> Self {
        Self { model: CellModel::SigmoidProduct(params), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > T::zero()) || !self.gamma.is_finite() {
            return Err(Error::param(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.i_in_nominal > T::zero()) || !self.i_in_nominal.is_finite() {
            return Err(Error::param(format!(
                "nominal input current must be positive, got {}",
                self.i_in_nominal
            )));
        }
        if let CellModel::SigmoidProduct(sp) = self.model {
            if !(sp.steepness > T::zero()) || !(sp.half_separation > T::zero()) {
                return Err(Error::param("sigmoid-product parameters must be positive"));
            }
        }
        Ok(())
    }
}

#[inline]
fn logistic<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

/// Output current of one cell for input current `i_in` and bias `dv`.
pub fn cell_response<T: Scalar>(i_in: T, dv: T, params: &CellParams<T>) -> Result<T> {
    cell_response_varied(i_in, dv, params, T::one())
}

/// Like [`cell_response`] with the cell's curvature scaled by `gamma_mult`.
///
/// In sigmoid-product mode the multiplier scales the logistic slope by its
/// square root, so the curve's second moment scales the same way as γ does.
pub fn cell_response_varied<T: Scalar>(i_in: T, dv: T, params: &CellParams<T>, gamma_mult: T) -> Result<T> {
    if !(i_in >= T::zero()) {
        return Err(Error::InvalidInput(format!("input current must be nonnegative, got {i_in}")));
    }
    Ok(match params.model {
        CellModel::IdealExponential => {
            let gamma = params.gamma * gamma_mult;
            i_in / T::lit(2.0) * (-(gamma * dv * dv)).exp()
        }
        CellModel::SigmoidProduct(sp) => {
            let k = sp.steepness * gamma_mult.sqrt();
            // (dv + w) and (w - dv) swap under dv -> -dv, keeping the curve exactly even
            i_in * (logistic(k * (dv + sp.half_separation)) * logistic(k * (sp.half_separation - dv)))
        }
    })
}

/// Nonnegative bias giving `I_out / I_in = gain` under the ideal model.
pub fn weight_to_dv<T: Scalar>(gain: T, params: &CellParams<T>) -> Result<T> {
    let half = T::lit(0.5);
    if !(gain > T::zero()) {
        return Err(Error::InvalidGain(gain.as_f64()));
    }
    if gain > half {
        return Err(Error::UnachievableGain(gain.as_f64()));
    }
    if gain == half {
        return Ok(T::zero());
    }
    Ok((-(T::lit(2.0) * gain).ln() / params.gamma).sqrt())
}

/// A kernel encoded as per-cell ΔV biases.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgrammedKernel<T> {
    /// Row-major ΔV magnitudes, volts.
    pub dv_grid: Vec<T>,
    /// Global gain scale `s` so that `s·max(w) = 1/2`.
    pub scale: T,
    pub source_kernel: GaussianKernel<T>,
    pub params: CellParams<T>,
}

impl<T: Scalar> ProgrammedKernel<T> {
    pub fn half_width(&self) -> usize {
        self.source_kernel.half_width()
    }

    pub fn side(&self) -> usize {
        self.source_kernel.side()
    }

    /// Target gains `s·w`, row-major.
    pub fn gains(&self) -> Vec<T> {
        self.source_kernel.weights().iter().map(|&w| self.scale * w).collect()
    }

    /// Sum of the programmed gains.
    pub fn gain_sum(&self) -> T {
        self.gains().into_iter().fold(T::zero(), |a, g| a + g)
    }
}

pub fn program_kernel<T: Scalar>(kernel: &GaussianKernel<T>, params: &CellParams<T>) -> Result<ProgrammedKernel<T>> {
    params.validate()?;
    if kernel.weights().iter().any(|w| !(*w > T::zero())) {
        return Err(Error::InvalidKernel("every weight must be strictly positive".into()));
    }
    let scale = T::lit(0.5) / kernel.max_weight();
    let dv_grid = kernel
        .weights()
        .iter()
        .map(|&w| weight_to_dv((scale * w).min(T::lit(0.5)), params))
        .collect::<Result<Vec<_>>>()?;
    Ok(ProgrammedKernel { dv_grid, scale, source_kernel: kernel.clone(), params: *params })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeviationReference {
    /// Least-squares Gaussian `a·exp(-b·ΔV²)` fitted to the sweep.
    FittedGaussian,
    /// The ideal cell equation with the configured γ.
    Eq4Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationSample<T> {
    pub dv: T,
    pub i_out: T,
    pub reference: T,
    pub abs_deviation: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport<T> {
    pub sweep_lo: T,
    pub sweep_hi: T,
    pub n_points: usize,
    pub avg_abs_deviation: T,
    pub max_abs_deviation: T,
    pub reference: DeviationReference,
    /// Amplitude and curvature of the reference Gaussian.
    pub reference_amplitude: T,
    pub reference_curvature: T,
    /// Set when the sweep leaves the ±1.3 V window the model is trusted in.
    pub extrapolated: bool,
    pub samples: Vec<DeviationSample<T>>,
}

/// Uniform inclusive grid; both endpoints are hit exactly.
pub fn sweep_grid<T: Scalar>(lo: T, hi: T, n_points: usize) -> Vec<T> {
    let last = T::count(n_points - 1);
    (0..n_points)
        .map(|i| {
            let t = T::count(i) / last;
            lo * (T::one() - t) + hi * t
        })
        .collect()
}

pub fn sweep_deviation<T: Scalar>(
    params: &CellParams<T>,
    lo: T,
    hi: T,
    n_points: usize,
    reference: DeviationReference,
) -> Result<DeviationReport<T>> {
    params.validate()?;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::param(format!("sweep range [{lo}, {hi}] is degenerate")));
    }
    if n_points < 3 {
        return Err(Error::param(format!("need at least 3 sweep points, got {n_points}")));
    }
    let i_in = params.i_in_nominal;
    let grid = sweep_grid(lo, hi, n_points);
    let response = grid
        .iter()
        .map(|&dv| cell_response(i_in, dv, params))
        .collect::<Result<Vec<_>>>()?;

    let (amplitude, curvature) = match reference {
        DeviationReference::Eq4Gaussian => (i_in / T::lit(2.0), params.gamma),
        DeviationReference::FittedGaussian => {
            let fit = fit_gaussian(&grid, &response)?;
            (fit.amplitude, fit.curvature)
        }
    };

    let mut samples = Vec::with_capacity(n_points);
    let mut total = T::zero();
    let mut max = T::zero();
    for (&dv, &i_out) in grid.iter().zip(&response) {
        let reference = amplitude * (-(curvature * dv * dv)).exp();
        let abs_deviation = (i_out - reference).abs();
        total = total + abs_deviation;
        max = max.max(abs_deviation);
        samples.push(DeviationSample { dv, i_out, reference, abs_deviation });
    }
    let window = T::lit(VALIDITY_WINDOW_V);
    Ok(DeviationReport {
        sweep_lo: lo,
        sweep_hi: hi,
        n_points,
        avg_abs_deviation: total / T::count(n_points),
        max_abs_deviation: max,
        reference,
        reference_amplitude: amplitude,
        reference_curvature: curvature,
        extrapolated: lo < -window || hi > window,
        samples,
    })
}

/// γ and input current recovered from a measured I-V sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration<T> {
    pub gamma: T,
    pub i_in: T,
    pub samples_used: usize,
}

/// Fits `ln I_out = ln(I_in/2) - γ·ΔV²` by linear least squares.
///
/// Samples with nonpositive current are skipped since they carry no log-domain
/// information.
pub fn calibrate_gamma<T: Scalar>(samples: &[(T, T)]) -> Result<Calibration<T>> {
    let (dv, i_out): (Vec<T>, Vec<T>) = samples.iter().copied().filter(|(_, i)| *i > T::zero()).unzip();
    let fit = fit_log_gaussian(&dv, &i_out)?;
    if !(fit.curvature > T::zero()) {
        return Err(Error::InvalidInput(format!(
            "measured curve is not bell shaped (fitted gamma {})",
            fit.curvature
        )));
    }
    Ok(Calibration { gamma: fit.curvature, i_in: T::lit(2.0) * fit.amplitude, samples_used: dv.len() })
}

/// Parses a two-column `dv i_out` text table. `#` starts a comment.
pub fn parse_iv_samples<T: Scalar>(text: &str) -> Result<Vec<(T, T)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).collect();
        if cols.len() != 2 {
            return Err(Error::Format(format!("line {}: expected 2 columns, got {}", lineno + 1, cols.len())));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::Format(format!("line {}: {s:?}: {e}", lineno + 1)))
        };
        out.push((T::lit(parse(cols[0])?), T::lit(parse(cols[1])?)));
    }
    if out.is_empty() {
        return Err(Error::Format("no samples found".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const NA: f64 = 1e-9;

    #[test]
    fn ideal_response_examples() {
        let p = CellParams::<f64>::default();
        assert_eq!(cell_response(100e-9, 0.0, &p).unwrap(), 50e-9);
        let dv = (2f64.ln()).sqrt();
        assert!((cell_response(100e-9, dv, &p).unwrap() - 25e-9).abs() < 1e-21);
        assert_eq!(cell_response(0.0, 0.7, &p).unwrap(), 0.0);
        assert!(matches!(cell_response(-1e-9, 0.0, &p), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn sigmoid_peak_at_zero() {
        let p = CellParams::<f64>::sigmoid_product(SigmoidProductParams::default());
        let peak = cell_response(1.0, 0.0, &p).unwrap();
        assert!(peak <= 1.0);
        for i in 1..200 {
            let dv = i as f64 * 0.01;
            assert!(cell_response(1.0, dv, &p).unwrap() <= peak);
        }
    }

    #[test]
    fn weight_to_dv_examples() {
        let p = CellParams::<f64>::ideal(1.0);
        assert_eq!(weight_to_dv(0.5, &p).unwrap(), 0.0);
        assert!((weight_to_dv(0.25, &p).unwrap() - 0.8325546111576977).abs() < 1e-12);
        assert!(matches!(weight_to_dv(0.6, &p), Err(Error::UnachievableGain(_))));
        assert!(matches!(weight_to_dv(0.0, &p), Err(Error::InvalidGain(_))));
        assert!(matches!(weight_to_dv(-0.1, &p), Err(Error::InvalidGain(_))));
    }

    #[test]
    fn flat_kernel_programs_to_zero_bias() {
        let k = GaussianKernel::<f64>::from_weights(1.0, 1, vec![0.3; 9]).unwrap();
        let pk = program_kernel(&k, &CellParams::<f64>::default()).unwrap();
        assert!(pk.dv_grid.iter().all(|v| *v == 0.0));
        assert!(pk.gains().iter().all(|g| (*g - 0.5).abs() < 1e-15));
    }

    #[test]
    fn gaussian_kernel_biases() {
        let k = GaussianKernel::<f64>::new(0.85, 1, false).unwrap();
        let pk = program_kernel(&k, &CellParams::<f64>::ideal(1.0)).unwrap();
        assert_eq!(pk.dv_grid[4], 0.0);
        let ratio = k.weight(1, 1) / k.weight(0, 0);
        assert!((ratio - 0.2505534).abs() < 1e-7);
        // corner bias is exactly sqrt(2 / (2 σ²)) = 1/σ for γ = 1
        assert!((pk.dv_grid[0] - 1.0 / 0.85).abs() < 1e-12);
        assert!((pk.scale * k.max_weight() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_zero_weight() {
        let mut w = vec![1.0; 9];
        w[0] = 0.0;
        let k = GaussianKernel::<f64>::from_weights(1.0, 1, w).unwrap();
        assert!(matches!(program_kernel(&k, &CellParams::<f64>::default()), Err(Error::InvalidKernel(_))));
    }

    #[test]
    fn ideal_sweep_against_itself_is_exact() {
        let p = CellParams::<f64>::default();
        let r = sweep_deviation(&p, -1.3, 1.3, 261, DeviationReference::Eq4Gaussian).unwrap();
        assert!(r.avg_abs_deviation <= 1e-15);
        assert!(!r.extrapolated);
        let r = sweep_deviation(&p, -1.3, 1.3, 3, DeviationReference::Eq4Gaussian).unwrap();
        assert_eq!(r.samples[0].i_out, r.samples[2].i_out);
        assert_eq!(r.samples[0].dv, -1.3);
        assert_eq!(r.samples[2].dv, 1.3);
        assert_eq!(r.samples[1].dv, 0.0);
    }

    #[test]
    fn sigmoid_sweep_has_sub_to_few_na_deviation() {
        let p = CellParams::<f64>::sigmoid_product(SigmoidProductParams::default());
        let r = sweep_deviation(&p, -1.3, 1.3, 261, DeviationReference::FittedGaussian).unwrap();
        assert!(r.avg_abs_deviation > 0.0);
        assert!(r.avg_abs_deviation > 0.01 * NA && r.avg_abs_deviation < 10.0 * NA, "{}", r.avg_abs_deviation);
        assert!(r.avg_abs_deviation <= r.max_abs_deviation);
    }

    #[test]
    fn sweep_errors() {
        let p = CellParams::<f64>::default();
        assert!(sweep_deviation(&p, 1.0, -1.0, 10, DeviationReference::Eq4Gaussian).is_err());
        assert!(sweep_deviation(&p, 1.0, 1.0, 10, DeviationReference::Eq4Gaussian).is_err());
        assert!(sweep_deviation(&p, -1.0, 1.0, 2, DeviationReference::Eq4Gaussian).is_err());
        let r = sweep_deviation(&p, -2.0, 1.0, 10, DeviationReference::Eq4Gaussian).unwrap();
        assert!(r.extrapolated);
    }

    #[test]
    fn calibration_recovers_gamma() {
        let p = CellParams::<f64>::ideal(2.5);
        let text: String = sweep_grid(-1.3, 1.3, 41)
            .into_iter()
            .map(|dv| format!("{dv:.17e} {:.17e}\n", cell_response(100e-9, dv, &p).unwrap()))
            .collect();
        let samples = parse_iv_samples::<f64>(&format!("# dv i_out\n\n{text}")).unwrap();
        let cal = calibrate_gamma(&samples).unwrap();
        assert!((cal.gamma - 2.5).abs() < 1e-9);
        assert!((cal.i_in - 100e-9).abs() < 1e-18);
        assert_eq!(cal.samples_used, 41);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(parse_iv_samples::<f64>("1.0 2.0 3.0\n").is_err());
        assert!(parse_iv_samples::<f64>("1.0 abc\n").is_err());
        assert!(parse_iv_samples::<f64>("# only comments\n").is_err());
    }
}
