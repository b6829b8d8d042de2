//! Config file sections. Every field has a default, so a section may list
//! any subset; unknown keys are rejected.

use std::path::Path;

use jointq::bench::{DEFAULT_INIT_SAMPLES, DEFAULT_WARMUP, TABLE_GAMMAS};
use jointq::detect::DetectorConfig;
use jointq::io::RowPolicy;
use jointq::joint::{TrackerKind, DEFAULT_GAMMA, DEFAULT_RHO_RATIO};
use jointq::streams::{Family, Variant};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    JsonLines,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnit {
    #[default]
    Ns,
    Ms,
    S,
}

impl TimeUnit {
    pub fn seconds_per_tick(self) -> f64 {
        match self {
            TimeUnit::Ns => 1e-9,
            TimeUnit::Ms => 1e-3,
            TimeUnit::S => 1.0,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub gen: GenConfig,
    #[serde(default)]
    pub track: TrackConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub bench: BenchConfig,
    #[serde(default)]
    pub detect: DetectConfig,
    #[serde(default)]
    pub score: ScoreConfig,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| {
            let msg = e.message().to_string();
            CliError::Usage(format!("config {}: {msg}", path.display()))
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub family: Family,
    pub variant: Variant,
    pub a: f64,
    pub b: f64,
    pub period: u64,
    pub n: u64,
    pub seed: u64,
    /// Probabilities whose true quantiles are appended as extra columns.
    pub truth: Vec<f64>,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            family: Family::Normal,
            variant: Variant::Periodic,
            a: 2.0,
            b: 6.0,
            period: 100,
            n: 10_000,
            seed: 1,
            truth: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackConfig {
    pub tracker: TrackerKind,
    pub probs: Vec<f64>,
    pub lambda: f64,
    pub gamma: f64,
    pub rho_ratio: f64,
    pub offset: f64,
    pub init_samples: usize,
    pub format: Format,
}

impl Default for TrackConfig {
    fn default() -> Self {
        Self {
            tracker: TrackerKind::CondQ,
            probs: vec![0.2, 0.5, 0.8],
            lambda: 0.01,
            gamma: DEFAULT_GAMMA,
            rho_ratio: DEFAULT_RHO_RATIO,
            offset: 0.0,
            init_samples: DEFAULT_INIT_SAMPLES,
            format: Format::Csv,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub family: Family,
    pub variant: Variant,
    pub a: f64,
    pub b: f64,
    pub period: u64,
    pub seed: u64,
    pub tracker: TrackerKind,
    pub probs: Vec<f64>,
    pub gamma: f64,
    pub rho_ratio: f64,
    /// Defaults to the family's benchmark offset.
    pub offset: Option<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub per_decade: usize,
    pub steps: usize,
    pub warmup: usize,
    pub init_samples: usize,
    pub format: Format,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            family: Family::Normal,
            variant: Variant::Periodic,
            a: 2.0,
            b: 6.0,
            period: 100,
            seed: 1,
            tracker: TrackerKind::CondQ,
            probs: vec![0.2, 0.5, 0.8],
            gamma: DEFAULT_GAMMA,
            rho_ratio: DEFAULT_RHO_RATIO,
            offset: None,
            lambda_min: 1e-3,
            lambda_max: 0.5,
            per_decade: 20,
            steps: 1_000_000,
            warmup: DEFAULT_WARMUP,
            init_samples: DEFAULT_INIT_SAMPLES,
            format: Format::Csv,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub families: Vec<Family>,
    pub variants: Vec<Variant>,
    pub ks: Vec<usize>,
    pub periods: Vec<u64>,
    pub trackers: Vec<TrackerKind>,
    pub gammas: Vec<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub per_decade: usize,
    pub steps: usize,
    pub warmup: usize,
    pub seed: u64,
    pub format: Format,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            families: vec![Family::Normal, Family::ChiSquare],
            variants: vec![Variant::Periodic, Variant::Switch],
            ks: vec![3, 19],
            periods: vec![100, 1000],
            trackers: vec![TrackerKind::ShiftQ, TrackerKind::CondQ],
            gammas: TABLE_GAMMAS.to_vec(),
            lambda_min: 1e-3,
            lambda_max: 0.5,
            per_decade: 20,
            steps: 1_000_000,
            warmup: DEFAULT_WARMUP,
            seed: 1,
            format: Format::Table,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectConfig {
    pub timestamp_unit: TimeUnit,
    pub bad_rows: RowPolicy,
    /// Only process this user.
    pub user: Option<String>,
    pub detector: DetectorConfig,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            timestamp_unit: TimeUnit::Ns,
            bad_rows: RowPolicy::Fail,
            user: None,
            detector: DetectorConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreConfig {
    /// Seconds after a change within which a detection may be credited.
    pub tolerance: Option<f64>,
    pub format: Format,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        let err = toml::from_str::<FileConfig>("[track]\nlambda = 0.1\nlamda = 0.2\n").unwrap_err();
        assert!(err.to_string().contains("lamda"));
        assert!(toml::from_str::<FileConfig>("[trak]\n").is_err());
        assert!(toml::from_str::<FileConfig>("[detect.detector]\netta = 3\n").is_err());
    }

    #[test]
    fn partial_sections_keep_defaults() {
        let cfg: FileConfig = toml::from_str(
            "[track]\ntracker = \"shiftq\"\n[detect]\ntimestamp_unit = \"ms\"\n[detect.detector]\neta = 15.0\n",
        )
        .unwrap();
        assert_eq!(cfg.track.tracker, TrackerKind::ShiftQ);
        assert_eq!(cfg.track.lambda, 0.01);
        assert_eq!(cfg.detect.timestamp_unit, TimeUnit::Ms);
        assert_eq!(cfg.detect.detector.eta, 15.0);
        assert_eq!(cfg.detect.detector.xi, DetectorConfig::default().xi);
    }
}
