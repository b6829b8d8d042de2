use serde::{Deserialize, Serialize};

use super::grid::QuantileGrid;
use crate::error::{Error, Result};
use crate::estimators::Dumiqe;

/// Joint tracker built on the multiplicative estimator.
///
/// The central quantile is tracked directly. Each other quantile is tracked
/// as a strictly positive gap to its already-updated inner neighbour, so the
/// reconstructed estimates are strictly increasing by construction.
///
/// Below the center the gap variable is `Q(q_{k+1}) - x`, whose
/// `1 - q_k` quantile equals `Q(q_{k+1}) - Q(q_k)`. Above the center it is
/// `x - Q(q_{k-1})`, whose `q_k` quantile equals `Q(q_k) - Q(q_{k-1})`.
///
/// All inputs are shifted by `offset` before entering the multiplicative
/// updates, and outputs are shifted back.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShiftQ {
    grid: QuantileGrid,
    offset: f64,
    central: Dumiqe,
    /// Gap trackers for `k = c-1, ..., 0`, in processing order.
    lower: Vec<Dumiqe>,
    /// Gap trackers for `k = c+1, ..., K-1`, in processing order.
    upper: Vec<Dumiqe>,
    /// Current estimates in offset units.
    shifted: Vec<f64>,
    estimates: Vec<f64>,
}

impl ShiftQ {
    /// `initial` are starting quantile estimates in data units. They must be
    /// strictly increasing and `initial[c] + offset > 0`.
    pub fn new(
        grid: QuantileGrid,
        lambda: f64,
        gamma: f64,
        offset: f64,
        initial: &[f64],
    ) -> Result<Self> {
        check_initial(&grid, initial)?;
        let c = grid.center();
        let probs = grid.probs();
        let central = Dumiqe::new(probs[c], lambda, initial[c] + offset).map_err(|e| {
            Error::Constraint(format!(
                "central estimate plus offset must be positive ({e}); configure a larger offset"
            ))
        })?;
        let lower = (0..c)
            .rev()
            .map(|k| Dumiqe::new(1.0 - probs[k], gamma, initial[k + 1] - initial[k]))
            .collect::<Result<Vec<_>>>()?;
        let upper = (c + 1..grid.len())
            .map(|k| Dumiqe::new(probs[k], gamma, initial[k] - initial[k - 1]))
            .collect::<Result<Vec<_>>>()?;
        let shifted = initial.iter().map(|v| v + offset).collect();
        Ok(Self {
            grid,
            offset,
            central,
            lower,
            upper,
            shifted,
            estimates: initial.to_vec(),
        })
    }

    pub fn step(&mut self, x: f64) -> &[f64] {
        let z = x + self.offset;
        let c = self.grid.center();
        self.central.update(z);
        self.shifted[c] = self.central.estimate();
        for (gap, k) in self.lower.iter_mut().zip((0..c).rev()) {
            gap.update(self.shifted[k + 1] - z);
            self.shifted[k] = self.shifted[k + 1] - resolvable(gap.estimate(), self.shifted[k + 1]);
        }
        for (gap, k) in self.upper.iter_mut().zip(c + 1..) {
            gap.update(z - self.shifted[k - 1]);
            self.shifted[k] = self.shifted[k - 1] + resolvable(gap.estimate(), self.shifted[k - 1]);
        }
        for (out, s) in self.estimates.iter_mut().zip(&self.shifted) {
            *out = s - self.offset;
        }
        &self.estimates
    }

    pub fn estimates(&self) -> &[f64] {
        &self.estimates
    }

    pub fn grid(&self) -> &QuantileGrid {
        &self.grid
    }

    pub fn central(&self) -> &Dumiqe {
        &self.central
    }

    /// Gap estimate for index `k` (not the center).
    pub fn gap(&self, k: usize) -> Option<&Dumiqe> {
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

pub(crate) fn check_initial(grid: &QuantileGrid, initial: &[f64]) -> Result<()> {
    if initial.len() != grid.len() {
        return Err(Error::Constraint(format!(
            "expected {} initial estimates, got {}",
            grid.len(),
            initial.len()
        )));
    }
    if initial.iter().any(|v| !v.is_finite()) {
        return Err(Error::Constraint("initial estimates must be finite".into()));
    }
    if let Some(w) = initial.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::Constraint(format!(
            "initial estimates must be strictly increasing ({} >= {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// A gap can shrink below the floating-point spacing at `base`; widen it just
/// enough that `base +/- gap` stays distinct from `base`.
fn resolvable(gap: f64, base: f64) -> f64 {
    gap.max(4.0 * f64::EPSILON * base.abs().max(f64::MIN_POSITIVE))
}
