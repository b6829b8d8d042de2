//! Joint tracking of several quantiles with a strict ordering guarantee.
//!
//! [`ShiftQ`] and [`CondQ`] track a central quantile directly and every other
//! quantile relative to its inner neighbour, which keeps estimates strictly
//! increasing at every step. [`Mdumiqe`] and [`ParallelDumiqe`] are baselines.

mod condq;
mod grid;
mod mdumiqe;
mod parallel;
mod shiftq;
mod warmup;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use condq::{Bracket, CondQ};
pub use grid::QuantileGrid;
pub use mdumiqe::Mdumiqe;
pub use parallel::ParallelDumiqe;
pub use shiftq::ShiftQ;
pub use warmup::empirical_quantile;

use crate::error::{Error, Result};

/// Default step for the non-central quantiles.
pub const DEFAULT_GAMMA: f64 = 0.01;
/// Default ratio between QEWA's conditional-mean rate and its step size.
pub const DEFAULT_RHO_RATIO: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrackerKind {
    #[serde(rename = "shiftq")]
    ShiftQ,
    #[serde(rename = "condq")]
    CondQ,
    Mdumiqe,
    ParallelDumiqe,
}

impl TrackerKind {
    pub const ALL: [TrackerKind; 4] = [
        TrackerKind::ShiftQ,
        TrackerKind::CondQ,
        TrackerKind::Mdumiqe,
        TrackerKind::ParallelDumiqe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TrackerKind::ShiftQ => "shiftq",
            TrackerKind::CondQ => "condq",
            TrackerKind::Mdumiqe => "mdumiqe",
            TrackerKind::ParallelDumiqe => "parallel-dumiqe",
        }
    }

    /// Whether the tracker guarantees strictly increasing estimates.
    pub fn is_monotone(self) -> bool {
        !matches!(self, TrackerKind::ParallelDumiqe)
    }

    /// Whether the tracker uses multiplicative updates and therefore needs
    /// positive (offset) data.
    pub fn is_multiplicative(self) -> bool {
        !matches!(self, TrackerKind::CondQ)
    }
}

impl fmt::Display for TrackerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TrackerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TrackerKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Constraint(format!(
                    "unknown tracker '{s}' (expected shiftq, condq, mdumiqe or parallel-dumiqe)"
                ))
            })
    }
}

/// Tuning parameters shared by all trackers.
///
/// `gamma` is ignored by the baselines. `rho_ratio` only matters for CondQ
/// (`rho = rho_ratio * lambda`). `offset` is added to every observation
/// before multiplicative updates and subtracted from the outputs; CondQ
/// ignores it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackerParams {
    pub lambda: f64,
    pub gamma: f64,
    pub rho_ratio: f64,
    pub offset: f64,
}

impl TrackerParams {
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            gamma: DEFAULT_GAMMA,
            rho_ratio: DEFAULT_RHO_RATIO,
            offset: 0.0,
        }
    }

    pub fn gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn rho_ratio(mut self, rho_ratio: f64) -> Self {
        self.rho_ratio = rho_ratio;
        self
    }

    pub fn offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    pub fn rho(&self) -> f64 {
        self.rho_ratio * self.lambda
    }
}

/// Any of the joint trackers behind one interface.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Tracker {
    ShiftQ(ShiftQ),
    CondQ(CondQ),
    Mdumiqe(Mdumiqe),
    ParallelDumiqe(ParallelDumiqe),
}

impl Tracker {
    /// Builds a tracker from a window of initial samples.
    ///
    /// The central estimate is the empirical quantile at the central
    /// probability; other quantiles start at their empirical counterparts,
    /// spread apart by `1e-6 x range` (at least `1e-6`) when ties occur.
    /// CondQ's conditional means start at the empirical conditional sample
    /// means, with fallbacks that keep every bracket valid.
    pub fn warmup(
        kind: TrackerKind,
        grid: QuantileGrid,
        params: TrackerParams,
        samples: &[f64],
    ) -> Result<Self> {
        let sorted = warmup::sorted_samples(samples, grid.len())?;
        let quantiles = warmup::spread_quantiles(&sorted, &grid);
        let TrackerParams {
            lambda,
            gamma,
            offset,
            ..
        } = params;
        Ok(match kind {
            TrackerKind::ShiftQ => {
                Tracker::ShiftQ(ShiftQ::new(grid, lambda, gamma, offset, &quantiles)?)
            }
            TrackerKind::CondQ => {
                let brackets = warmup::condq_brackets(&sorted, &grid, &quantiles);
                Tracker::CondQ(CondQ::new(grid, lambda, gamma, params.rho(), &brackets)?)
            }
            TrackerKind::Mdumiqe => {
                Tracker::Mdumiqe(Mdumiqe::new(grid, lambda, offset, &quantiles)?)
            }
            TrackerKind::ParallelDumiqe => {
                Tracker::ParallelDumiqe(ParallelDumiqe::new(grid, lambda, offset, &quantiles)?)
            }
        })
    }

    #[inline]
    pub fn step(&mut self, x: f64) -> &[f64] {
        match self {
            Tracker::ShiftQ(t) => t.step(x),
            Tracker::CondQ(t) => t.step(x),
            Tracker::Mdumiqe(t) => t.step(x),
            Tracker::ParallelDumiqe(t) => t.step(x),
        }
    }

    pub fn estimates(&self) -> &[f64] {
        match self {
            Tracker::ShiftQ(t) => t.estimates(),
            Tracker::CondQ(t) => t.estimates(),
            Tracker::Mdumiqe(t) => t.estimates(),
            Tracker::ParallelDumiqe(t) => t.estimates(),
        }
    }

    pub fn grid(&self) -> &QuantileGrid {
        match self {
            Tracker::ShiftQ(t) => t.grid(),
            Tracker::CondQ(t) => t.grid(),
            Tracker::Mdumiqe(t) => t.grid(),
            Tracker::ParallelDumiqe(t) => t.grid(),
        }
    }

    pub fn kind(&self) -> TrackerKind {
        match self {
            Tracker::ShiftQ(_) => TrackerKind::ShiftQ,
            Tracker::CondQ(_) => TrackerKind::CondQ,
            Tracker::Mdumiqe(_) => TrackerKind::Mdumiqe,
            Tracker::ParallelDumiqe(_) => TrackerKind::ParallelDumiqe,
        }
    }
}

/// True when `estimates` is not strictly increasing.
pub fn is_violation(estimates: &[f64]) -> bool {
    estimates.windows(2).any(|w| !(w[0] < w[1]))
}
