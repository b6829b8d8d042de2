//! Online activity-change detection on three-axis streams.
//!
//! Two detectors share one thresholding scheme. The quantile detector tracks
//! a set of quantiles per axis and measures the Euclidean distance between
//! the current estimates and those from `h` seconds earlier. The moment
//! detector tracks an EWMA mean and variance per axis and measures the
//! absolute change of the mean over `h` seconds in units of the current
//! standard deviation. Either statistic is standardised with its own EWMA
//! mean and standard deviation, and a change is declared when the largest
//! standardised value over the axes reaches `eta`. After a detection every
//! estimator restarts from scratch.

mod score;
pub mod synthetic;

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use score::{score, ScoreReport};

use crate::error::{check_probability, Error, Result};
use crate::joint::{QuantileGrid, Tracker, TrackerKind, TrackerParams};

pub const AXES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DetectorMethod {
    #[serde(rename = "ed-shiftq")]
    EdShiftQ,
    #[serde(rename = "ed-condq")]
    EdCondQ,
    #[serde(rename = "md")]
    Md,
}

impl DetectorMethod {
    pub fn name(self) -> &'static str {
        match self {
            DetectorMethod::EdShiftQ => "ed-shiftq",
            DetectorMethod::EdCondQ => "ed-condq",
            DetectorMethod::Md => "md",
        }
    }

    fn tracker_kind(self) -> Option<TrackerKind> {
        match self {
            DetectorMethod::EdShiftQ => Some(TrackerKind::ShiftQ),
            DetectorMethod::EdCondQ => Some(TrackerKind::CondQ),
            DetectorMethod::Md => None,
        }
    }
}

impl fmt::Display for DetectorMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ed-shiftq" => Ok(DetectorMethod::EdShiftQ),
            "ed-condq" => Ok(DetectorMethod::EdCondQ),
            "md" => Ok(DetectorMethod::Md),
            _ => Err(Error::Constraint(format!(
                "unknown detector '{s}' (expected ed-shiftq, ed-condq or md)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorConfig {
    pub method: DetectorMethod,
    /// Central step size of the quantile tracker.
    pub lambda: f64,
    /// Step size of the non-central quantiles.
    pub gamma: f64,
    pub rho_ratio: f64,
    /// EWMA rate of the moment detector's mean and second moment.
    pub nu: f64,
    /// EWMA rate of the distance statistic's moments.
    pub xi: f64,
    /// Look-back horizon in seconds.
    pub horizon_secs: f64,
    /// Threshold in standard deviations.
    pub eta: f64,
    /// Samples per second.
    pub sample_rate: f64,
    pub probs: Vec<f64>,
    /// Offset for the multiplicative tracker (ShiftQ only).
    pub offset: f64,
    /// Seconds of data used to initialise the estimators after a (re)start.
    pub init_secs: f64,
    /// Seconds of statistic history collected before detections are armed.
    pub arm_secs: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            method: DetectorMethod::EdCondQ,
            lambda: 0.01,
            gamma: 0.1,
            rho_ratio: crate::joint::DEFAULT_RHO_RATIO,
            nu: 0.01,
            xi: 0.1,
            horizon_secs: 1.0,
            eta: 10.0,
            sample_rate: 20.0,
            probs: (1..=9).map(|k| k as f64 / 10.0).collect(),
            // covers a +/-2g accelerometer range in m/s^2
            offset: 20.0,
            init_secs: 2.0,
            arm_secs: 5.0,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda", self.lambda), ("nu", self.nu), ("xi", self.xi)] {
            check_probability(name, v)?;
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Constraint(format!("gamma must lie in (0, 1], got {}", self.gamma)));
        }
        for (name, v) in [
            ("horizon_secs", self.horizon_secs),
            ("eta", self.eta),
            ("sample_rate", self.sample_rate),
            ("init_secs", self.init_secs),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Constraint(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.arm_secs >= 0.0) {
            return Err(Error::Constraint("arm_secs must be non-negative".into()));
        }
        QuantileGrid::new(self.probs.clone())?;
        if self.init_samples() < self.probs.len() + 1 {
            return Err(Error::Constraint(format!(
                "init_secs * sample_rate must cover at least {} samples",
                self.probs.len() + 1
            )));
        }
        Ok(())
    }

    /// Length of the look-back ring buffer, `ceil(h * rate)`.
    pub fn horizon_samples(&self) -> usize {
        ((self.horizon_secs * self.sample_rate).ceil() as usize).max(1)
    }

    pub fn init_samples(&self) -> usize {
        (self.init_secs * self.sample_rate).ceil() as usize
    }

    pub fn arm_samples(&self) -> usize {
        (self.arm_secs * self.sample_rate).ceil() as usize
    }

    fn tracker_params(&self) -> TrackerParams {
        TrackerParams::new(self.lambda)
            .gamma(self.gamma)
            .rho_ratio(self.rho_ratio)
            .offset(self.offset)
    }
}

/// A declared change.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    /// 0-based index of the sample that triggered the detection.
    pub index: u64,
    /// Timestamp of that sample in seconds.
    pub time: f64,
    /// Axis with the largest standardised statistic (0 = x, 1 = y, 2 = z).
    pub dimension: usize,
    /// Raw distance statistic on that axis.
    pub statistic: f64,
    /// Standardised statistic on that axis.
    pub score: f64,
}

/// Euclidean distance between two equally long vectors.
pub fn euclidean_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// EWMA of a value and its square. Until `1 / count` drops below the rate
/// the average is a plain running mean, so early estimates are unbiased.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EwmaMoments {
    rate: f64,
    mean: f64,
    mean_sq: f64,
    count: u64,
}

impl EwmaMoments {
    pub fn new(rate: f64) -> Self {
        Self {
            rate,
            mean: 0.0,
            mean_sq: 0.0,
            count: 0,
        }
    }

    /// Moments of `samples`, after which updates use `rate` directly.
    pub fn seeded(rate: f64, samples: &[f64]) -> Self {
        let n = samples.len().max(1) as f64;
        Self {
            rate,
            mean: samples.iter().sum::<f64>() / n,
            mean_sq: samples.iter().map(|v| v * v).sum::<f64>() / n,
            count: (1.0 / rate).ceil() as u64,
        }
    }

    pub fn push(&mut self, v: f64) {
        self.count += 1;
        let w = self.rate.max(1.0 / self.count as f64);
        self.mean += w * (v - self.mean);
        self.mean_sq += w * (v * v - self.mean_sq);
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// `sqrt(max(0, E[v^2] - E[v]^2))`; never NaN.
    pub fn std_dev(&self) -> f64 {
        (self.mean_sq - self.mean * self.mean).max(0.0).sqrt()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// `(v - mean) / std_dev`, or `None` without history or spread.
    pub fn standardise(&self, v: f64) -> Option<f64> {
        let sd = self.std_dev();
        (self.count > 0 && sd > 0.0).then(|| (v - self.mean) / sd)
    }
}

#[derive(Debug, Clone)]
enum Estimator {
    Quantiles(Tracker),
    Moments(EwmaMoments),
}

#[derive(Debug, Clone)]
struct Axis {
    estimator: Estimator,
    /// Past estimate vectors, oldest first.
    history: VecDeque<Vec<f64>>,
    stat: EwmaMoments,
}

impl Axis {
    /// Feeds one value and returns the current estimate vector plus, for the
    /// moment detector, the current standard deviation.
    fn update(&mut self, x: f64) -> (Vec<f64>, f64) {
        match &mut self.estimator {
            Estimator::Quantiles(t) => (t.step(x).to_vec(), 1.0),
            Estimator::Moments(m) => {
                m.push(x);
                (vec![m.mean()], m.std_dev())
            }
        }
    }
}

/// Streaming change detector over three-axis samples.
#[derive(Debug, Clone)]
pub struct Detector {
    config: DetectorConfig,
    grid: QuantileGrid,
    axes: Option<[Axis; AXES]>,
    init_buffer: Vec<[f64; AXES]>,
    index: u64,
}

impl Detector {
    pub fn new(config: DetectorConfig) -> Result<Self> {
        config.validate()?;
        let grid = QuantileGrid::new(config.probs.clone())?;
        Ok(Self {
            config,
            grid,
            axes: None,
            init_buffer: Vec::new(),
            index: 0,
        })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    /// Whether the estimators are running (false while collecting
    /// initialisation data after a start or restart).
    pub fn is_tracking(&self) -> bool {
        self.axes.is_some()
    }

    fn restart(&mut self) {
        self.axes = None;
        self.init_buffer.clear();
    }

    fn initialise(&mut self) -> Result<()> {
        let mut axes = Vec::with_capacity(AXES);
        for w in 0..AXES {
            let column: Vec<f64> = self.init_buffer.iter().map(|s| s[w]).collect();
            let estimator = match self.config.method.tracker_kind() {
                Some(kind) => Estimator::Quantiles(Tracker::warmup(
                    kind,
                    self.grid.clone(),
                    self.config.tracker_params(),
                    &column,
                )?),
                None => Estimator::Moments(EwmaMoments::seeded(self.config.nu, &column)),
            };
            axes.push(Axis {
                estimator,
                history: VecDeque::with_capacity(self.config.horizon_samples() + 1),
                stat: EwmaMoments::new(self.config.xi),
            });
        }
        self.axes = Some(axes.try_into().expect("three axes"));
        self.init_buffer.clear();
        Ok(())
    }

    /// Processes one sample taken at `time` seconds.
    ///
    /// Each axis's statistic is standardised against the EWMA moments
    /// accumulated up to the previous sample and only then folded into them.
    pub fn step(&mut self, time: f64, sample: [f64; AXES]) -> Result<Option<Detection>> {
        let index = self.index;
        self.index += 1;
        if self.axes.is_none() {
            self.init_buffer.push(sample);
            if self.init_buffer.len() >= self.config.init_samples() {
                self.initialise()?;
            }
            return Ok(None);
        }
        let horizon = self.config.horizon_samples();
        let arm = self.config.arm_samples() as u64;
        let eta = self.config.eta;
        let axes = self.axes.as_mut().expect("tracking");
        let mut best: Option<Detection> = None;
        for (w, axis) in axes.iter_mut().enumerate() {
            let (current, sd) = axis.update(sample[w]);
            if axis.history.len() == horizon {
                let past = axis.history.pop_front().expect("full buffer");
                let statistic = match axis.estimator {
                    Estimator::Quantiles(_) => euclidean_distance(&current, &past),
                    Estimator::Moments(_) => {
                        if sd > 0.0 {
                            (current[0] - past[0]).abs() / sd
                        } else {
                            0.0
                        }
                    }
                };
                let armed = axis.stat.count() >= arm.max(1);
                let z = axis.stat.standardise(statistic);
                axis.stat.push(statistic);
                if let (true, Some(z)) = (armed, z) {
                    if z >= eta && best.is_none_or(|b| z > b.score) {
                        best = Some(Detection {
                            index,
                            time,
                            dimension: w,
                            statistic,
                            score: z,
                        });
                    }
                }
            }
            axis.history.push_back(current);
        }
        if best.is_some() {
            self.restart();
        }
        Ok(best)
    }

    /// Runs over samples spaced `1 / sample_rate` apart starting at time 0.
    pub fn run(&mut self, samples: &[[f64; AXES]]) -> Result<Vec<Detection>> {
        let rate = self.config.sample_rate;
        let mut out = Vec::new();
        for (i, &s) in samples.iter().enumerate() {
            if let Some(d) = self.step(i as f64 / rate, s)? {
                out.push(d);
            }
        }
        Ok(out)
    }

    /// Runs over `(time, sample)` pairs.
    pub fn run_timed(&mut self, samples: impl IntoIterator<Item = (f64, [f64; AXES])>) -> Result<Vec<Detection>> {
        let mut out = Vec::new();
        for (t, s) in samples {
            if let Some(d) = self.step(t, s)? {
                out.push(d);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_arithmetic() {
        assert_eq!(euclidean_distance(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(euclidean_distance(&[3.0, 4.0], &[0.0, 0.0]), 5.0);
        // consistent permutation leaves the distance unchanged
        let a = [1.0, -2.0, 0.5];
        let b = [0.0, 3.0, 2.0];
        let pa = [0.5, 1.0, -2.0];
        let pb = [2.0, 0.0, 3.0];
        assert_eq!(euclidean_distance(&a, &b), euclidean_distance(&pa, &pb));
    }

    #[test]
    fn moments_never_nan() {
        let mut m = EwmaMoments::new(0.1);
        assert_eq!(m.standardise(1.0), None);
        for _ in 0..100 {
            m.push(1e8 + 0.1);
        }
        assert!(m.std_dev() >= 0.0 && !m.std_dev().is_nan());
        let mut m = EwmaMoments::new(0.5);
        m.push(2.0);
        m.push(4.0);
        // running mean for the first two values
        assert_eq!(m.mean(), 3.0);
        assert_eq!(m.std_dev(), 1.0);
    }

    #[test]
    fn config_validation() {
        assert!(DetectorConfig::default().validate().is_ok());
        let mut c = DetectorConfig::default();
        c.eta = 0.0;
        assert!(c.validate().is_err());
        let mut c = DetectorConfig::default();
        c.probs = vec![0.5, 0.4];
        assert!(c.validate().is_err());
        let mut c = DetectorConfig::default();
        c.init_secs = 0.1;
        assert!(c.validate().is_err());
        assert_eq!(DetectorConfig::default().horizon_samples(), 20);
    }

    #[test]
    fn constant_input_never_fires_moment_detector() {
        let mut d = Detector::new(DetectorConfig {
            method: DetectorMethod::Md,
            ..DetectorConfig::default()
        })
        .unwrap();
        let samples = vec![[1.0, -2.0, 9.8]; 5000];
        assert!(d.run(&samples).unwrap().is_empty());
    }

    #[test]
    fn restart_blocks_until_buffer_refills() {
        // A huge jump triggers a detection; the detector then needs a fresh
        // init window, a full look-back buffer and the arming period.
        let config = DetectorConfig {
            method: DetectorMethod::Md,
            horizon_secs: 2.0,
            arm_secs: 1.0,
            eta: 3.0,
            ..DetectorConfig::default()
        };
        let mut d = Detector::new(config.clone()).unwrap();
        let mut samples = Vec::new();
        for i in 0..4000 {
            let base = if i < 1000 { 0.0 } else { 100.0 };
            let wiggle = ((i * 7919) % 13) as f64 / 13.0 - 0.5;
            samples.push([base + wiggle, wiggle, -wiggle]);
        }
        let det = d.run(&samples).unwrap();
        assert!(!det.is_empty());
        let quiet = (config.init_samples() + config.horizon_samples() + config.arm_samples()) as u64;
        for w in det.windows(2) {
            assert!(w[1].index - w[0].index > quiet);
        }
    }
}
