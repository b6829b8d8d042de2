use serde::{Deserialize, Serialize};

use super::grid::QuantileGrid;
use crate::error::{Error, Result};
use crate::estimators::{Qewa, Support};

/// Estimate plus its two conditional means, used to seed a QEWA state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub mu_minus: f64,
    pub estimate: f64,
    pub mu_plus: f64,
}

impl Bracket {
    pub fn new(mu_minus: f64, estimate: f64, mu_plus: f64) -> Self {
        Self {
            mu_minus,
            estimate,
            mu_plus,
        }
    }
}

/// Joint tracker built on QEWA and conditional quantiles.
///
/// For `k < c` the tracker follows `y = x - Q(q_{k+1})` restricted to
/// `y < 0`; the `q_k` quantile of `x` is the `q_k / q_{k+1}` quantile of
/// that truncated variable, shifted back. For `k > c` it follows
/// `y = x - Q(q_{k-1})` restricted to `y > 0`, at conditional probability
/// `(q_k - q_{k-1}) / (1 - q_{k-1})`. Observations outside a conditional
/// support leave that state untouched.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CondQ {
    grid: QuantileGrid,
    central: Qewa,
    lower: Vec<Qewa>,
    upper: Vec<Qewa>,
    estimates: Vec<f64>,
}

impl CondQ {
    /// `initial[c]` seeds the central state in data units. Every other entry
    /// is in shifted units: strictly negative below the center and strictly
    /// positive above it, with the conditional means bracketing the estimate
    /// on the same side of zero.
    pub fn new(
        grid: QuantileGrid,
        lambda: f64,
        gamma: f64,
        rho: f64,
        initial: &[Bracket],
    ) -> Result<Self> {
        if initial.len() != grid.len() {
            return Err(Error::Constraint(format!(
                "expected {} initial brackets, got {}",
                grid.len(),
                initial.len()
            )));
        }
        let c = grid.center();
        let probs = grid.probs();
        let seed = |b: &Bracket, q: f64, step: f64, support: Support| {
            Qewa::new(q, step, rho, b.estimate, b.mu_minus, b.mu_plus)?.with_support(support)
        };
        let central = seed(&initial[c], probs[c], lambda, Support::Unbounded)?;
        let lower = (0..c)
            .rev()
            .map(|k| seed(&initial[k], probs[k] / probs[k + 1], gamma, Support::Negative))
            .collect::<Result<Vec<_>>>()?;
        let upper = (c + 1..grid.len())
            .map(|k| {
                let q = (probs[k] - probs[k - 1]) / (1.0 - probs[k - 1]);
                seed(&initial[k], q, gamma, Support::Positive)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut tracker = Self {
            grid,
            central,
            lower,
            upper,
            estimates: vec![0.0; initial.len()],
        };
        tracker.reconstruct();
        if tracker.estimates.iter().any(|v| !v.is_finite()) {
            return Err(Error::Constraint("initial estimates must be finite".into()));
        }
        Ok(tracker)
    }

    fn reconstruct(&mut self) {
        let c = self.grid.center();
        self.estimates[c] = self.central.estimate();
        for (state, k) in self.lower.iter().zip((0..c).rev()) {
            self.estimates[k] = self.estimates[k + 1] + state.estimate();
        }
        for (state, k) in self.upper.iter().zip(c + 1..) {
            self.estimates[k] = self.estimates[k - 1] + state.estimate();
        }
    }

    pub fn step(&mut self, x: f64) -> &[f64] {
        let c = self.grid.center();
        self.central.update(x);
        self.estimates[c] = self.central.estimate();
        for (state, k) in self.lower.iter_mut().zip((0..c).rev()) {
            let inner = self.estimates[k + 1];
            if x < inner {
                state.update(x - inner);
            }
            self.estimates[k] = inner + state.estimate();
        }
        for (state, k) in self.upper.iter_mut().zip(c + 1..) {
            let inner = self.estimates[k - 1];
            if x > inner {
                state.update(x - inner);
            }
            self.estimates[k] = inner + state.estimate();
        }
        &self.estimates
    }

    pub fn estimates(&self) -> &[f64] {
        &self.estimates
    }

    pub fn grid(&self) -> &QuantileGrid {
        &self.grid
    }

    pub fn central(&self) -> &Qewa {
        &self.central
    }

    /// Conditional state for index `k` (not the center).
    pub fn conditional(&self, k: usize) -> Option<&Qewa> {
        let c = self.grid.center();
        if k < c {
            self.lower.get(c - 1 - k)
        } else if k > c {
            self.upper.get(k - c - 1)
        } else {
            None
        }
    }
}
