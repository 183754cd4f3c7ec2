//! Subcommand implementations. Each returns what it wrote so callers and
//! tests can inspect results without re-reading files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use flexdog_core::cell::{calibrate_gamma, parse_iv_samples, sweep_deviation, Calibration, DeviationReference, DeviationReport, VALIDITY_WINDOW_V};
use flexdog_core::dog::IntensityImage;
use flexdog_core::perf::{breakdown, PerfBreakdown};
use flexdog_core::pipeline::{monte_carlo, run_dog_pipeline_detailed, MonteCarloSummary, PipelineRun};

use crate::config::{ConfigArgs, RunConfig};
use crate::error::{CliError, Result};
use crate::report::{timestamp, Artifacts, ExperimentReport, ImageInfo, OracleInfo, SCHEMA_VERSION, TOOL, VISUALIZATION_NOTE};
use crate::visual::{binarize, codes_to_gray, intensity_to_gray, load_input, values_to_gray};
use crate::pgm;

/// Removes written files unless the command completes.
struct ArtifactGuard {
    written: Vec<PathBuf>,
    committed: bool,
}

impl ArtifactGuard {
    fn new() -> Self {
        Self { written: Vec::new(), committed: false }
    }

    fn write(&mut self, path: PathBuf, bytes: &[u8]) -> Result<()> {
        self.written.push(path.clone());
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))
    }

    fn commit(mut self) -> Vec<PathBuf> {
        self.committed = true;
        std::mem::take(&mut self.written)
    }
}

impl Drop for ArtifactGuard {
    fn drop(&mut self) {
        if !self.committed {
            for p in &self.written {
                let _ = fs::remove_file(p);
            }
        }
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(format!("json: {e}")))?;
    s.push('\n');
    Ok(s.into_bytes())
}

/// Applies `--calibrate-from`, replacing γ with the fitted value.
fn calibrate(cfg: &mut RunConfig, path: Option<&Path>) -> Result<Option<Calibration<f64>>> {
    let Some(path) = path else { return Ok(None) };
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let samples = parse_iv_samples::<f64>(&text).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
    let cal = calibrate_gamma(&samples).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
    cfg.gamma = cal.gamma;
    cfg.validate()?;
    Ok(Some(cal))
}

fn prepare_image(cfg: &RunConfig) -> Result<IntensityImage<f64>> {
    let image = load_input(&cfg.input, cfg.index, cfg.pattern_size)?;
    Ok(match cfg.binarize_threshold {
        Some(t) => binarize(&image, t),
        None => image,
    })
}

pub struct RunOutput {
    pub report: ExperimentReport,
    pub run: PipelineRun<f64>,
    pub files: Vec<PathBuf>,
}

fn check_run(run: &PipelineRun<f64>, image: &IntensityImage<f64>, cfg: &RunConfig) -> Result<()> {
    let p = cfg.half_width;
    let (w, h) = (image.width() - 2 * p, image.height() - 2 * p);
    let codes = &run.codes;
    if codes.width() != w || codes.height() != h || !run.oracle_codes.same_shape(&codes.codes) {
        return Err(CliError::Internal(format!("DoG output is {}x{}, expected {w}x{h}", codes.width(), codes.height())));
    }
    let max = codes.max_code();
    if codes.codes.iter().any(|c| c.abs() > max) {
        return Err(CliError::Internal("DoG code outside the signed ADC range".into()));
    }
    let r = &run.report;
    if (r.energy_j - r.power_w * r.runtime_s).abs() > 1e-12 * r.energy_j.abs().max(1e-30) {
        return Err(CliError::Internal("energy is not power times runtime".into()));
    }
    Ok(())
}

/// `run`: one simulated frame with image artifacts and a JSON report.
pub fn cmd_run(input: Option<String>, args: &ConfigArgs, command: &str) -> Result<RunOutput> {
    let mut cfg = RunConfig::resolve(input, args)?;
    let calibration = calibrate(&mut cfg, args.calibrate_from.as_deref())?;
    let image = prepare_image(&cfg)?;
    let (k1, k2) = cfg.kernels()?;
    let run = run_dog_pipeline_detailed(&image, &k1, &k2, &cfg.analog_config(), cfg.seed)?;
    check_run(&run, &image, &cfg)?;

    let max_code = run.codes.max_code();
    let oracle = OracleInfo {
        sigma1: run.oracle.sigma1,
        sigma2: run.oracle.sigma2,
        output_width: run.oracle.values.width(),
        output_height: run.oracle.values.height(),
        max_abs: run.oracle.values.max_abs(),
        max_abs_codes: run.oracle_codes.max_abs(),
    };
    let artifacts = Artifacts::default();
    let report = ExperimentReport {
        schema_version: SCHEMA_VERSION,
        tool: TOOL.into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        timestamp: timestamp(),
        config: cfg.clone(),
        calibration,
        image: ImageInfo { width: image.width(), height: image.height(), binarized: cfg.binarize_threshold.is_some() },
        oracle,
        simulation: run.report.clone(),
        visualization: VISUALIZATION_NOTE.into(),
        artifacts: artifacts.clone(),
    };

    let dir = &cfg.out_dir;
    create_dir(dir)?;
    let (ow, oh) = (run.codes.width(), run.codes.height());
    let mut guard = ArtifactGuard::new();
    guard.write(dir.join(&artifacts.input), &pgm::encode(image.width(), image.height(), &intensity_to_gray(&image)))?;
    guard.write(dir.join(&artifacts.oracle_dog), &pgm::encode(ow, oh, &values_to_gray(&run.oracle_codes, max_code as f64)))?;
    guard.write(dir.join(&artifacts.analog_dog), &pgm::encode(ow, oh, &codes_to_gray(&run.codes.codes, max_code)))?;
    guard.write(dir.join(&artifacts.report), &to_json(&report)?)?;
    Ok(RunOutput { report, run, files: guard.commit() })
}

pub fn format_run_summary(out: &RunOutput) -> String {
    let r = &out.report.simulation;
    let e = &r.errors;
    let mut s = String::new();
    let _ = writeln!(s, "image        {}x{} -> DoG {}x{}", out.report.image.width, out.report.image.height, out.run.codes.width(), out.run.codes.height());
    let _ = writeln!(s, "adc          {} bit, vref {:.6} V, {} saturated", r.adc_bits, r.vref_v, r.saturation_count);
    let _ = writeln!(s, "error        mean {:.4} LSB, max {:.4} LSB", e.mean_abs_error, e.max_abs_error);
    let loc = e.edge_localization.map_or("n/a".to_string(), |v| format!("{:.1}%", 100.0 * v));
    let _ = writeln!(s, "edges        {} analog, {} oracle, flip rate {:.4}, localized {loc}", e.edge_pixels, e.oracle_edge_pixels, e.edge_flip_rate);
    let _ = writeln!(s, "per filter   {:.4} uW, {:.4} us, {:.4} nJ", r.power_w * 1e6, r.runtime_s * 1e6, r.energy_j * 1e9);
    for f in &out.files {
        let _ = writeln!(s, "wrote        {}", f.display());
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SweepSource {
    Gamma,
    Gain,
    Sensor,
    All,
}

impl SweepSource {
    fn apply(self, cfg: &mut RunConfig, level: f64) {
        match self {
            SweepSource::Gamma => cfg.variation_gamma = level,
            SweepSource::Gain => cfg.variation_gain = level,
            SweepSource::Sensor => cfg.variation_sensor = level,
            SweepSource::All => {
                cfg.variation_gamma = level;
                cfg.variation_gain = level;
                cfg.variation_sensor = level;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: f64,
    pub n_trials: usize,
    pub mean_mae: f64,
    pub std_mae: f64,
    pub max_mae: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub mean_flip_rate: f64,
}

impl LevelSummary {
    fn new(level: f64, s: &MonteCarloSummary) -> Self {
        let (ci95_low, ci95_high) = s.ci95();
        Self {
            level,
            n_trials: s.n_trials,
            mean_mae: s.mean_mae,
            std_mae: s.std_mae,
            max_mae: s.max_mae,
            ci95_low,
            ci95_high,
            mean_flip_rate: s.mean_flip_rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub timestamp: u64,
    pub sweep: SweepSource,
    pub base_seed: u64,
    pub config: RunConfig,
    pub levels: Vec<LevelSummary>,
}

pub const MONTECARLO_CSV_HEADER: &str = "level,trial,seed,mean_abs_error,max_abs_error,edge_flip_rate,saturation_count";

pub struct MonteCarloOutput {
    pub report: MonteCarloReport,
    pub summaries: Vec<MonteCarloSummary>,
    pub files: Vec<PathBuf>,
}

/// `montecarlo`: repeated runs at each variation level of one source.
pub fn cmd_montecarlo(
    input: Option<String>,
    args: &ConfigArgs,
    trials: usize,
    levels: &[f64],
    sweep: SweepSource,
) -> Result<MonteCarloOutput> {
    let mut cfg = RunConfig::resolve(input, args)?;
    calibrate(&mut cfg, args.calibrate_from.as_deref())?;
    if trials == 0 {
        return Err(CliError::Config("--trials must be at least 1".into()));
    }
    if levels.is_empty() {
        return Err(CliError::Config("--levels needs at least one value".into()));
    }
    let image = prepare_image(&cfg)?;
    let (k1, k2) = cfg.kernels()?;

    let mut csv = String::from(MONTECARLO_CSV_HEADER);
    csv.push('\n');
    let mut summaries = Vec::with_capacity(levels.len());
    for &level in levels {
        let mut level_cfg = cfg.clone();
        sweep.apply(&mut level_cfg, level);
        level_cfg.validate()?;
        let summary = monte_carlo(&image, &k1, &k2, &level_cfg.analog_config(), trials, cfg.seed)?;
        for t in &summary.trials {
            let _ = writeln!(
                csv,
                "{level},{},{},{},{},{},{}",
                t.trial, t.seed, t.mean_abs_error, t.max_abs_error, t.edge_flip_rate, t.saturation_count
            );
        }
        summaries.push(summary);
    }
    let report = MonteCarloReport {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        timestamp: timestamp(),
        sweep,
        base_seed: cfg.seed,
        config: cfg.clone(),
        levels: levels.iter().zip(&summaries).map(|(&l, s)| LevelSummary::new(l, s)).collect(),
    };
    create_dir(&cfg.out_dir)?;
    let mut guard = ArtifactGuard::new();
    guard.write(cfg.out_dir.join("montecarlo.csv"), csv.as_bytes())?;
    guard.write(cfg.out_dir.join("montecarlo.json"), &to_json(&report)?)?;
    Ok(MonteCarloOutput { report, summaries, files: guard.commit() })
}

pub fn format_montecarlo_summary(out: &MonteCarloOutput) -> String {
    let mut s = String::from("level      mean MAE   std MAE    95% CI                 max MAE    flip rate\n");
    for l in &out.report.levels {
        let _ = writeln!(
            s,
            "{:<10} {:<10.4} {:<10.4} [{:.4}, {:.4}]{:<6} {:<10.4} {:.4}",
            l.level, l.mean_mae, l.std_mae, l.ci95_low, l.ci95_high, "", l.max_mae, l.mean_flip_rate
        );
    }
    for f in &out.files {
        let _ = writeln!(s, "wrote {}", f.display());
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceKind {
    /// Least-squares Gaussian fitted to the sweep.
    Fitted,
    /// `(I_in/2)·exp(-γ·ΔV²)` with the configured γ.
    Ideal,
}

impl From<ReferenceKind> for DeviationReference {
    fn from(r: ReferenceKind) -> Self {
        match r {
            ReferenceKind::Fitted => DeviationReference::FittedGaussian,
            ReferenceKind::Ideal => DeviationReference::Eq4Gaussian,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationOutputReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub timestamp: u64,
    pub config: RunConfig,
    pub deviation: DeviationReport<f64>,
}

pub struct DeviationOutput {
    pub report: DeviationReport<f64>,
    pub files: Vec<PathBuf>,
}

pub const DEVIATION_CSV_HEADER: &str = "dv,i_out,reference,abs_deviation";

/// `deviation`: cell response against a Gaussian over a ΔV sweep.
pub fn cmd_deviation(args: &ConfigArgs, reference: ReferenceKind, lo: f64, hi: f64, points: usize) -> Result<DeviationOutput> {
    let mut cfg = RunConfig::resolve(None, args)?;
    calibrate(&mut cfg, args.calibrate_from.as_deref())?;
    if !(lo < hi) {
        return Err(CliError::Config(format!("sweep range [{lo}, {hi}] is empty or reversed")));
    }
    let report = sweep_deviation(&cfg.cell_params(), lo, hi, points, reference.into())?;
    let mut csv = String::from(DEVIATION_CSV_HEADER);
    csv.push('\n');
    for s in &report.samples {
        let _ = writeln!(csv, "{},{},{},{}", s.dv, s.i_out, s.reference, s.abs_deviation);
    }
    let json = DeviationOutputReport {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        timestamp: timestamp(),
        config: cfg.clone(),
        deviation: report.clone(),
    };
    create_dir(&cfg.out_dir)?;
    let mut guard = ArtifactGuard::new();
    guard.write(cfg.out_dir.join("deviation.csv"), csv.as_bytes())?;
    guard.write(cfg.out_dir.join("deviation.json"), &to_json(&json)?)?;
    Ok(DeviationOutput { report, files: guard.commit() })
}

pub fn format_deviation_summary(out: &DeviationOutput) -> String {
    let r = &out.report;
    let mut s = String::new();
    let _ = writeln!(s, "sweep            [{}, {}] V, {} points", r.sweep_lo, r.sweep_hi, r.n_points);
    let _ = writeln!(s, "reference        {:.6e} A * exp(-{:.6} * dv^2)", r.reference_amplitude, r.reference_curvature);
    let _ = writeln!(s, "average |dev|    {:.4} nA", r.avg_abs_deviation * 1e9);
    let _ = writeln!(s, "max |dev|        {:.4} nA", r.max_abs_deviation * 1e9);
    if r.extrapolated {
        let _ = writeln!(s, "warning          sweep leaves the +/-{VALIDITY_WINDOW_V} V validity window");
    }
    for f in &out.files {
        let _ = writeln!(s, "wrote            {}", f.display());
    }
    s
}

pub struct PerfOutput {
    pub breakdown: PerfBreakdown,
    pub files: Vec<PathBuf>,
}

/// `perf`: analytic power, runtime and energy for an `m × n` frame.
pub fn cmd_perf(m: usize, n: usize, args: &ConfigArgs) -> Result<PerfOutput> {
    let cfg = RunConfig::resolve(None, args)?;
    let b = breakdown(m, n, &cfg.perf_spec())?;
    let mut files = Vec::new();
    if args.out_dir.is_some() {
        create_dir(&cfg.out_dir)?;
        let mut guard = ArtifactGuard::new();
        guard.write(cfg.out_dir.join("perf.json"), &to_json(&b)?)?;
        files = guard.commit();
    }
    Ok(PerfOutput { breakdown: b, files })
}

pub fn format_perf_table(out: &PerfOutput) -> String {
    let b = &out.breakdown;
    let mut s = String::new();
    let _ = writeln!(s, "image {}x{}, {} pixels timed, parallelism {}", b.image_width, b.image_height, b.pixels_timed, b.parallelism);
    let _ = writeln!(s, "{:<18} {:>12} {:>14} {:>12} {:>12}  realtime", "", "power (uW)", "runtime (us)", "runtime (s)", "energy (nJ)");
    for (label, f) in [("single filter", &b.per_convolution), ("full DoG (est.)", &b.full_dog)] {
        let _ = writeln!(
            s,
            "{label:<18} {:>12.4} {:>14.4} {:>12.6} {:>12.5}  {}",
            f.power_w * 1e6,
            f.runtime_s * 1e6,
            f.runtime_s,
            f.energy_j * 1e9,
            if f.realtime { "yes" } else { "no" }
        );
    }
    for f in &out.files {
        let _ = writeln!(s, "wrote {}", f.display());
    }
    s
}
