//! Seeded synthetic streams whose location or shape drifts over time, plus
//! their exact quantile functions.
//!
//! Normal streams have unit variance and mean `a sin(2 pi n / T)` (periodic)
//! or `+a` / `-a` (switch). Chi-square streams vary the degrees of freedom as
//! `a sin(2 pi n / T) + b` or `b + a` / `b - a`. The sample index `n` starts
//! at 1.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dist::{chi_square_quantile, normal_quantile};
use crate::error::{check_probability, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Normal,
    #[serde(alias = "chi2")]
    ChiSquare,
}

/// How the distribution parameter evolves. `Static` freezes it at `a` for
/// normal streams and at `b` degrees of freedom for chi-square streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Periodic,
    Switch,
    Static,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Normal => "normal",
            Family::ChiSquare => "chisquare",
        })
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Periodic => "periodic",
            Variant::Switch => "switch",
            Variant::Static => "static",
        })
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "normal" => Ok(Family::Normal),
            "chisquare" | "chi2" | "chi-square" => Ok(Family::ChiSquare),
            _ => Err(Error::Constraint(format!(
                "unknown family '{s}' (expected normal or chisquare)"
            ))),
        }
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "periodic" => Ok(Variant::Periodic),
            "switch" => Ok(Variant::Switch),
            "static" => Ok(Variant::Static),
            _ => Err(Error::Constraint(format!(
                "unknown variant '{s}' (expected periodic, switch or static)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StreamConfig {
    pub family: Family,
    pub variant: Variant,
    pub a: f64,
    pub b: f64,
    pub period: u64,
    pub seed: u64,
}

impl StreamConfig {
    pub fn normal(variant: Variant, a: f64, period: u64, seed: u64) -> Self {
        Self {
            family: Family::Normal,
            variant,
            a,
            b: 0.0,
            period,
            seed,
        }
    }

    pub fn chi_square(variant: Variant, a: f64, b: f64, period: u64, seed: u64) -> Self {
        Self {
            family: Family::ChiSquare,
            variant,
            a,
            b,
            period,
            seed,
        }
    }

    /// The settings used for the benchmark tables: `a = 2`, and `b = 6` for
    /// chi-square streams.
    pub fn benchmark(family: Family, variant: Variant, period: u64, seed: u64) -> Self {
        match family {
            Family::Normal => Self::normal(variant, 2.0, period, seed),
            Family::ChiSquare => Self::chi_square(variant, 2.0, 6.0, period, seed),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.period < 2 {
            return Err(Error::Constraint(format!(
                "period must be at least 2, got {}",
                self.period
            )));
        }
        if !self.a.is_finite() || !self.b.is_finite() {
            return Err(Error::Constraint("a and b must be finite".into()));
        }
        if self.family == Family::ChiSquare {
            let ok = match self.variant {
                Variant::Static => self.b > 0.0,
                _ => self.b > self.a && self.a > 0.0,
            };
            if !ok {
                return Err(Error::Constraint(format!(
                    "chi-square streams need b > a > 0 (static: b > 0), got a={}, b={}",
                    self.a, self.b
                )));
            }
        }
        Ok(())
    }

    /// Mean (normal) or degrees of freedom (chi-square) at sample `n >= 1`.
    pub fn param_at(&self, n: u64) -> f64 {
        let phase = n % self.period;
        let t = self.period as f64;
        let base = match self.family {
            Family::Normal => 0.0,
            Family::ChiSquare => self.b,
        };
        match self.variant {
            Variant::Periodic => {
                self.a * (2.0 * std::f64::consts::PI * phase as f64 / t).sin() + base
            }
            Variant::Switch => {
                if phase as f64 <= t / 2.0 {
                    base + self.a
                } else {
                    base - self.a
                }
            }
            Variant::Static => match self.family {
                Family::Normal => self.a,
                Family::ChiSquare => self.b,
            },
        }
    }

    /// Exact quantile of the sample at index `n`.
    pub fn true_quantile(&self, n: u64, q: f64) -> f64 {
        let param = self.param_at(n);
        match self.family {
            Family::Normal => param + normal_quantile(q),
            Family::ChiSquare => chi_square_quantile(q, param),
        }
    }

    /// Number of distinct parameter values over time; the parameter at `n`
    /// depends only on `n % period`.
    fn phases(&self) -> u64 {
        match self.variant {
            Variant::Static => 1,
            _ => self.period,
        }
    }

    pub fn generator(&self) -> Result<StreamGenerator> {
        StreamGenerator::new(*self)
    }
}

/// Draws the stream one sample at a time. Deterministic given the config.
#[derive(Debug, Clone)]
pub struct StreamGenerator {
    config: StreamConfig,
    rng: ChaCha8Rng,
    n: u64,
}

impl StreamGenerator {
    pub fn new(config: StreamConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            n: 0,
        })
    }

    /// Index of the most recently drawn sample (0 before the first draw).
    pub fn index(&self) -> u64 {
        self.n
    }

    pub fn config(&self) -> &StreamConfig {
        &self.config
    }

    pub fn next_sample(&mut self) -> f64 {
        self.n += 1;
        let param = self.config.param_at(self.n);
        match self.config.family {
            Family::Normal => {
                let z: f64 = StandardNormal.sample(&mut self.rng);
                param + z
            }
            Family::ChiSquare => Gamma::new(0.5 * param, 2.0)
                .expect("validated degrees of freedom")
                .sample(&mut self.rng),
        }
    }

    pub fn take_samples(&mut self, count: usize) -> Vec<f64> {
        (0..count).map(|_| self.next_sample()).collect()
    }
}

impl Iterator for StreamGenerator {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        Some(self.next_sample())
    }
}

/// Precomputed true quantiles for a fixed set of probabilities, one row per
/// distinct parameter value.
#[derive(Debug, Clone)]
pub struct TrueQuantileOracle {
    config: StreamConfig,
    probs: Vec<f64>,
    rows: Vec<Vec<f64>>,
}

impl TrueQuantileOracle {
    pub fn new(config: StreamConfig, probs: &[f64]) -> Result<Self> {
        config.validate()?;
        for &q in probs {
            check_probability("q", q)?;
        }
        let phases = config.phases();
        let rows = (0..phases)
            .map(|phase| {
                // any n with this phase; n = phase + period keeps n >= 1
                let n = phase + config.period;
                probs.iter().map(|&q| config.true_quantile(n, q)).collect()
            })
            .collect();
        Ok(Self {
            config,
            probs: probs.to_vec(),
            rows,
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// True quantiles at sample `n`, in the order of `probs()`.
    pub fn at(&self, n: u64) -> &[f64] {
        let idx = if self.rows.len() == 1 {
            0
        } else {
            (n % self.config.period) as usize
        };
        &self.rows[idx]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn param_examples() {
        let c = StreamConfig::normal(Variant::Periodic, 2.0, 100, 0);
        assert!((c.param_at(25) - 2.0).abs() < 1e-15);
        assert_eq!(c.param_at(100), 0.0);

        let c = StreamConfig::chi_square(Variant::Switch, 2.0, 6.0, 100, 0);
        assert_eq!(c.param_at(30), 8.0);
        assert_eq!(c.param_at(50), 8.0);
        assert_eq!(c.param_at(51), 4.0);
        assert_eq!(c.param_at(100), 8.0);

        let c = StreamConfig::normal(Variant::Switch, 2.0, 7, 0);
        // 3.5 threshold: phases 0..=3 high, 4..=6 low
        assert_eq!(c.param_at(3), 2.0);
        assert_eq!(c.param_at(4), -2.0);
    }

    #[test]
    fn validation() {
        assert!(StreamConfig::normal(Variant::Periodic, 2.0, 1, 0).validate().is_err());
        assert!(StreamConfig::chi_square(Variant::Periodic, 6.0, 2.0, 100, 0).validate().is_err());
        assert!(StreamConfig::chi_square(Variant::Periodic, 0.0, 2.0, 100, 0).validate().is_err());
        assert!(StreamConfig::chi_square(Variant::Static, 0.0, 8.0, 100, 0).validate().is_ok());
    }

    #[test]
    fn determinism() {
        let c = StreamConfig::benchmark(Family::ChiSquare, Variant::Periodic, 100, 42);
        let a = c.generator().unwrap().take_samples(10_000);
        let b = c.generator().unwrap().take_samples(10_000);
        assert_eq!(a, b);
        let d = c.with_seed(43).generator().unwrap().take_samples(10);
        assert_ne!(a[..10], d[..]);
    }

    #[test]
    fn oracle_matches_direct_evaluation() {
        for family in [Family::Normal, Family::ChiSquare] {
            for variant in [Variant::Periodic, Variant::Switch, Variant::Static] {
                let c = StreamConfig::benchmark(family, variant, 100, 0);
                let probs = [0.2, 0.5, 0.8];
                let o = TrueQuantileOracle::new(c, &probs).unwrap();
                for n in [1u64, 2, 49, 50, 51, 99, 100, 101, 12345] {
                    for (i, &q) in probs.iter().enumerate() {
                        assert!((o.at(n)[i] - c.true_quantile(n, q)).abs() < 1e-12);
                    }
                }
            }
        }
        let c = StreamConfig::normal(Variant::Static, 3.0, 100, 0);
        assert_eq!(c.true_quantile(5, 0.5), 3.0);
    }

    #[test]
    fn true_quantile_increases_in_q() {
        for family in [Family::Normal, Family::ChiSquare] {
            let c = StreamConfig::benchmark(family, Variant::Periodic, 100, 0);
            for n in [1u64, 25, 75] {
                let v: Vec<f64> = (1..100).map(|i| c.true_quantile(n, i as f64 / 100.0)).collect();
                assert!(v.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }
}
