//! Tracking-error experiments over the synthetic streams.
//!
//! The error metric is the per-quantile root mean squared error against the
//! exact quantile, averaged over the grid:
//! `(1/K) sum_k sqrt(mean_n (Q_n(q_k) - est_n(q_k))^2)`. The estimate scored
//! at step `n` is the one produced after seeing sample `n`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::joint::{is_violation, QuantileGrid, Tracker, TrackerKind, TrackerParams};
use crate::streams::{Family, StreamConfig, TrueQuantileOracle, Variant};

/// Samples excluded from scoring at the start of every run.
pub const DEFAULT_WARMUP: usize = 10_000;
/// Samples consumed to initialise a tracker before scoring starts.
pub const DEFAULT_INIT_SAMPLES: usize = 100;
/// Offset applied to normal streams for the multiplicative trackers, keeping
/// the shifted data positive with overwhelming probability.
pub const NORMAL_STREAM_OFFSET: f64 = 10.0;
/// Step sizes examined by the tables' second parameter.
pub const TABLE_GAMMAS: [f64; 4] = [0.1, 0.01, 0.001, 0.0001];

/// Logarithmically spaced values from `lo` to `hi` inclusive with
/// `per_decade` points per factor of ten.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && per_decade > 0);
    let decades = (hi / lo).log10();
    let steps = (decades * per_decade as f64 + 1e-9).floor() as usize;
    let mut out: Vec<f64> = (0..=steps)
        .map(|i| lo * 10f64.powf(i as f64 / per_decade as f64))
        .collect();
    if hi / out[out.len() - 1] > 1.0 + 1e-9 {
        out.push(hi);
    }
    out
}

/// The step-size grid used for "optimal step length" results:
/// 20 points per decade over `[1e-3, 0.5]`.
pub fn table_lambda_grid() -> Vec<f64> {
    log_grid(1e-3, 0.5, 20)
}

/// Offset used for the multiplicative trackers on a given family.
pub fn default_offset(family: Family) -> f64 {
    match family {
        Family::Normal => NORMAL_STREAM_OFFSET,
        Family::ChiSquare => 0.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub stream: StreamConfig,
    pub tracker: TrackerKind,
    pub grid: QuantileGrid,
    pub lambdas: Vec<f64>,
    pub gamma: f64,
    pub rho_ratio: f64,
    pub offset: f64,
    /// Tracking steps per run, including the unscored warmup.
    pub steps: usize,
    pub warmup: usize,
    pub init_samples: usize,
}

impl ExperimentSpec {
    pub fn new(stream: StreamConfig, tracker: TrackerKind, grid: QuantileGrid) -> Self {
        Self {
            offset: default_offset(stream.family),
            stream,
            tracker,
            grid,
            lambdas: table_lambda_grid(),
            gamma: crate::joint::DEFAULT_GAMMA,
            rho_ratio: crate::joint::DEFAULT_RHO_RATIO,
            steps: 1_000_000,
            warmup: DEFAULT_WARMUP,
            init_samples: DEFAULT_INIT_SAMPLES,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.stream.validate()?;
        if self.steps <= self.warmup {
            return Err(Error::Constraint(format!(
                "steps ({}) must exceed warmup ({})",
                self.steps, self.warmup
            )));
        }
        if self.lambdas.is_empty() {
            return Err(Error::Constraint("lambda grid must not be empty".into()));
        }
        if let Some(l) = self.lambdas.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
            return Err(Error::Constraint(format!("lambda must lie in (0, 1), got {l}")));
        }
        Ok(())
    }

    pub fn params(&self, lambda: f64) -> TrackerParams {
        TrackerParams::new(lambda)
            .gamma(self.gamma)
            .rho_ratio(self.rho_ratio)
            .offset(self.offset)
    }
}

/// Running sums for the averaged RMSE.
#[derive(Debug, Clone)]
pub struct RmseAccumulator {
    sq_sums: Vec<f64>,
    count: usize,
}

impl RmseAccumulator {
    pub fn new(k: usize) -> Self {
        Self {
            sq_sums: vec![0.0; k],
            count: 0,
        }
    }

    #[inline]
    pub fn push(&mut self, truth: &[f64], estimates: &[f64]) {
        for ((s, t), e) in self.sq_sums.iter_mut().zip(truth).zip(estimates) {
            let d = t - e;
            *s += d * d;
        }
        self.count += 1;
    }

    pub fn per_quantile(&self) -> Vec<f64> {
        let n = self.count.max(1) as f64;
        self.sq_sums.iter().map(|s| (s / n).sqrt()).collect()
    }

    pub fn rmse(&self) -> f64 {
        let per = self.per_quantile();
        per.iter().sum::<f64>() / per.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseEntry {
    pub lambda: f64,
    pub rmse: f64,
    pub per_quantile: Vec<f64>,
    /// Steps (scored or not) whose estimates were not strictly increasing.
    pub violations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseReport {
    pub entries: Vec<RmseEntry>,
}

impl RmseReport {
    /// The entry with the smallest RMSE.
    pub fn optimal(&self) -> &RmseEntry {
        self.entries
            .iter()
            .min_by(|a, b| a.rmse.total_cmp(&b.rmse))
            .expect("non-empty report")
    }

    pub fn violations(&self) -> u64 {
        self.entries.iter().map(|e| e.violations).sum()
    }

    /// `(lambda, rmse)` pairs in grid order.
    pub fn curve(&self) -> Vec<(f64, f64)> {
        self.entries.iter().map(|e| (e.lambda, e.rmse)).collect()
    }
}

/// A pre-drawn stream shared by every step size of one experiment.
struct PreparedStream {
    init: Vec<f64>,
    samples: Vec<f64>,
    /// Stream index of `samples[0]`.
    first_index: u64,
    oracle: TrueQuantileOracle,
}

impl PreparedStream {
    fn new(spec: &ExperimentSpec) -> Result<Self> {
        let mut gen = spec.stream.generator()?;
        let init = gen.take_samples(spec.init_samples);
        let first_index = gen.index() + 1;
        let samples = gen.take_samples(spec.steps);
        let oracle = TrueQuantileOracle::new(spec.stream, spec.grid.probs())?;
        Ok(Self {
            init,
            samples,
            first_index,
            oracle,
        })
    }

    fn run(&self, spec: &ExperimentSpec, lambda: f64) -> Result<RmseEntry> {
        let mut tracker = Tracker::warmup(spec.tracker, spec.grid.clone(), spec.params(lambda), &self.init)?;
        let mut acc = RmseAccumulator::new(spec.grid.len());
        let mut violations = 0u64;
        for (i, &x) in self.samples.iter().enumerate() {
            let est = tracker.step(x);
            if is_violation(est) {
                violations += 1;
            }
            if i >= spec.warmup {
                acc.push(self.oracle.at(self.first_index + i as u64), est);
            }
        }
        Ok(RmseEntry {
            lambda,
            rmse: acc.rmse(),
            per_quantile: acc.per_quantile(),
            violations,
        })
    }
}

/// One run at a single step size.
pub fn run_rmse(spec: &ExperimentSpec, lambda: f64) -> Result<RmseEntry> {
    spec.validate()?;
    PreparedStream::new(spec)?.run(spec, lambda)
}

/// One run per step size in `spec.lambdas`, in parallel, all on the same
/// realisation of the stream.
pub fn sweep(spec: &ExperimentSpec) -> Result<RmseReport> {
    spec.validate()?;
    let stream = PreparedStream::new(spec)?;
    let entries = spec
        .lambdas
        .par_iter()
        .map(|&l| stream.run(spec, l))
        .collect::<Result<Vec<_>>>()?;
    Ok(RmseReport { entries })
}

/// One cell of a results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub family: Family,
    pub variant: Variant,
    pub k: usize,
    pub period: u64,
    pub tracker: TrackerKind,
    pub gamma: f64,
    pub lambda_opt: f64,
    pub rmse: f64,
    pub violations: u64,
}

/// Which cells to compute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TablePlan {
    pub families: Vec<(Family, Variant)>,
    pub ks: Vec<usize>,
    pub periods: Vec<u64>,
    pub trackers: Vec<TrackerKind>,
    pub gammas: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub steps: usize,
    pub warmup: usize,
    pub seed: u64,
}

impl TablePlan {
    /// All four stream models, both grids, both periods, ShiftQ and CondQ
    /// across the four gamma values.
    pub fn full(seed: u64) -> Self {
        Self {
            families: vec![
                (Family::Normal, Variant::Periodic),
                (Family::Normal, Variant::Switch),
                (Family::ChiSquare, Variant::Periodic),
                (Family::ChiSquare, Variant::Switch),
            ],
            ks: vec![3, 19],
            periods: vec![100, 1000],
            trackers: vec![TrackerKind::ShiftQ, TrackerKind::CondQ],
            gammas: TABLE_GAMMAS.to_vec(),
            lambdas: table_lambda_grid(),
            steps: 1_000_000,
            warmup: DEFAULT_WARMUP,
            seed,
        }
    }

    fn specs(&self) -> Result<Vec<ExperimentSpec>> {
        let mut out = Vec::new();
        for &(family, variant) in &self.families {
            for &k in &self.ks {
                let grid = table_grid(k)?;
                for &period in &self.periods {
                    let stream = StreamConfig::benchmark(family, variant, period, self.seed);
                    for &tracker in &self.trackers {
                        let gammas: &[f64] = if uses_gamma(tracker) { &self.gammas } else { &[f64::NAN] };
                        for &gamma in gammas {
                            let mut spec = ExperimentSpec::new(stream, tracker, grid.clone());
                            spec.gamma = if gamma.is_nan() { crate::joint::DEFAULT_GAMMA } else { gamma };
                            spec.lambdas = self.lambdas.clone();
                            spec.steps = self.steps;
                            spec.warmup = self.warmup;
                            out.push(spec);
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

fn uses_gamma(kind: TrackerKind) -> bool {
    matches!(kind, TrackerKind::ShiftQ | TrackerKind::CondQ)
}

/// The two grids used in the tables: `(0.2, 0.5, 0.8)` and `0.05 k, k = 1..19`.
pub fn table_grid(k: usize) -> Result<QuantileGrid> {
    match k {
        3 => QuantileGrid::new(vec![0.2, 0.5, 0.8]),
        19 => QuantileGrid::evenly_spaced(0.05, 19),
        _ => Err(Error::Constraint(format!("table grids have K = 3 or 19, got {k}"))),
    }
}

/// Minimum-over-lambda RMSE for every cell of `plan`. Cells are independent
/// and run in parallel; rows come back sorted by cell key.
pub fn reproduce_tables(plan: &TablePlan) -> Result<Vec<TableRow>> {
    let specs = plan.specs()?;
    let rows = specs
        .par_iter()
        .map(|spec| {
            let report = sweep(spec)?;
            let best = report.optimal();
            Ok(TableRow {
                family: spec.stream.family,
                variant: spec.stream.variant,
                k: spec.grid.len(),
                period: spec.stream.period,
                tracker: spec.tracker,
                gamma: spec.gamma,
                lambda_opt: best.lambda,
                rmse: best.rmse,
                violations: report.violations(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut keyed: BTreeMap<_, TableRow> = BTreeMap::new();
    for row in rows {
        let key = (
            row.family,
            row.variant,
            row.k,
            row.period,
            row.tracker,
            std::cmp::Reverse(ordered(row.gamma)),
        );
        keyed.insert(key, row);
    }
    Ok(keyed.into_values().collect())
}

fn ordered(v: f64) -> u64 {
    // non-negative floats order like their bit patterns
    v.to_bits()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accumulator_arithmetic() {
        let mut acc = RmseAccumulator::new(1);
        acc.push(&[0.0], &[0.0]);
        assert_eq!(acc.rmse(), 0.0);

        let mut acc = RmseAccumulator::new(1);
        acc.push(&[1.0], &[0.7]);
        acc.push(&[1.0], &[1.4]);
        assert!((acc.rmse() - (0.25f64 / 2.0).sqrt()).abs() < 1e-12);

        // per-quantile 0.2 and 0.4 average to 0.3
        let mut acc = RmseAccumulator::new(2);
        acc.push(&[0.0, 0.0], &[0.2, 0.4]);
        acc.push(&[0.0, 0.0], &[-0.2, -0.4]);
        assert!((acc.rmse() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn lambda_grid_shape() {
        let g = table_lambda_grid();
        assert_eq!(g[0], 1e-3);
        assert_eq!(*g.last().unwrap(), 0.5);
        assert_eq!(g.len(), 55);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(log_grid(0.01, 0.01, 5), vec![0.01]);
    }

    fn small_spec(kind: TrackerKind) -> ExperimentSpec {
        let stream = StreamConfig::benchmark(Family::Normal, Variant::Periodic, 100, 3);
        let mut spec = ExperimentSpec::new(stream, kind, table_grid(3).unwrap());
        spec.steps = 20_000;
        spec.warmup = 1_000;
        spec.lambdas = vec![0.05];
        spec
    }

    #[test]
    fn singleton_sweep_and_determinism() {
        let spec = small_spec(TrackerKind::CondQ);
        let a = sweep(&spec).unwrap();
        assert_eq!(a.entries.len(), 1);
        let b = sweep(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(run_rmse(&spec, 0.05).unwrap(), a.entries[0]);
    }

    #[test]
    fn rejects_bad_specs() {
        let mut spec = small_spec(TrackerKind::ShiftQ);
        spec.lambdas = vec![];
        assert!(sweep(&spec).is_err());
        let mut spec = small_spec(TrackerKind::ShiftQ);
        spec.steps = spec.warmup;
        assert!(sweep(&spec).is_err());
    }
}
