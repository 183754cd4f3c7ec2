//! JSON experiment report written next to the image artifacts.

use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use flexdog_core::cell::Calibration;
use flexdog_core::perf::SimReport;

use crate::config::RunConfig;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL: &str = "flexdog";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageInfo {
    pub width: usize,
    pub height: usize,
    pub binarized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleInfo {
    pub sigma1: f64,
    pub sigma2: f64,
    pub output_width: usize,
    pub output_height: usize,
    /// Largest `|D|` in intensity units.
    pub max_abs: f64,
    /// Largest `|D|` converted to code units.
    pub max_abs_codes: f64,
}

/// Artifact file names, relative to the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifacts {
    pub input: String,
    pub oracle_dog: String,
    pub analog_dog: String,
    pub report: String,
}

impl Default for Artifacts {
    fn default() -> Self {
        Self {
            input: "input.pgm".into(),
            oracle_dog: "oracle_dog.pgm".into(),
            analog_dog: "analog_dog.pgm".into(),
            report: "report.json".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` wins when set.
    pub timestamp: u64,
    pub config: RunConfig,
    pub calibration: Option<Calibration<f64>>,
    pub image: ImageInfo,
    pub oracle: OracleInfo,
    pub simulation: SimReport,
    pub visualization: String,
    pub artifacts: Artifacts,
}

pub const VISUALIZATION_NOTE: &str =
    "DoG images map code c to gray round(127.5 + 127.5*c/max_code), so zero is 128; \
     the oracle is converted to the same code units before mapping";

pub fn timestamp() -> u64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.trim().parse().ok()) {
        return t;
    }
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}
