//! Single-quantile incremental estimators.
//!
//! [`Dumiqe`] is the multiplicative estimator: every observation scales the
//! estimate up by `1 + λq` or down by `1 - λ(1 - q)`, so a positive start
//! stays positive forever. [`Qewa`] is an exponentially weighted average
//! whose weight is recomputed after every step from tracked conditional
//! means on either side of the estimate, which steers it to the quantile
//! instead of the mean.

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};

/// Multiplicative incremental quantile estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dumiqe {
    estimate: f64,
    q: f64,
    lambda: f64,
}

impl Dumiqe {
    pub fn new(q: f64, lambda: f64, initial_estimate: f64) -> Result<Self> {
        check_probability("q", q)?;
        check_probability("lambda", lambda)?;
        if !(initial_estimate > 0.0 && initial_estimate.is_finite()) {
            return Err(Error::Constraint(format!(
                "DUMIQE initial estimate must be finite and > 0, got {initial_estimate}"
            )));
        }
        Ok(Self {
            estimate: initial_estimate,
            q,
            lambda,
        })
    }

    /// Ties (`estimate == x`) take the decrease branch.
    #[inline]
    pub fn update(&mut self, x: f64) {
        if self.estimate < x {
            self.estimate *= 1.0 + self.lambda * self.q;
        } else {
            self.estimate *= 1.0 - self.lambda * (1.0 - self.q);
        }
    }

    /// Multiplicative factor the next update would apply for observation `x`.
    #[inline]
    pub fn factor_for(&self, x: f64) -> f64 {
        if self.estimate < x {
            1.0 + self.lambda * self.q
        } else {
            1.0 - self.lambda * (1.0 - self.q)
        }
    }

    pub fn estimate(&self) -> f64 {
        self.estimate
    }

    pub(crate) fn set_estimate(&mut self, value: f64) {
        debug_assert!(value > 0.0);
        self.estimate = value;
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Sign constraint on a QEWA state's conditional means.
///
/// Conditional trackers below the central quantile observe strictly negative
/// shifted values and must keep `mu_plus < 0`; those above observe strictly
/// positive values and must keep `mu_minus > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Support {
    #[default]
    Unbounded,
    Negative,
    Positive,
}

/// Quantile estimator based on an adaptively weighted EWA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Qewa {
    estimate: f64,
    mu_minus: f64,
    mu_plus: f64,
    weight: f64,
    q: f64,
    lambda: f64,
    rho: f64,
    support: Support,
}

impl Qewa {
    /// `weight()` reports the weight applied by the most recent update and
    /// starts at `lambda / 2`.
    pub fn new(
        q: f64,
        lambda: f64,
        rho: f64,
        initial_estimate: f64,
        initial_mu_minus: f64,
        initial_mu_plus: f64,
    ) -> Result<Self> {
        check_probability("q", q)?;
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::Constraint(format!(
                "lambda must lie in (0, 1], got {lambda}"
            )));
        }
        check_probability("rho", rho)?;
        let finite = [initial_estimate, initial_mu_minus, initial_mu_plus]
            .iter()
            .all(|v| v.is_finite());
        if !finite || !(initial_mu_minus < initial_estimate && initial_estimate < initial_mu_plus) {
            return Err(Error::Constraint(format!(
                "mu_minus < estimate < mu_plus must hold, got mu_minus={initial_mu_minus}, \
                 estimate={initial_estimate}, mu_plus={initial_mu_plus}"
            )));
        }
        Ok(Self {
            estimate: initial_estimate,
            mu_minus: initial_mu_minus,
            mu_plus: initial_mu_plus,
            weight: lambda / 2.0,
            q,
            lambda,
            rho,
            support: Support::Unbounded,
        })
    }

    /// Restricts the state to one side of zero. The current state must
    /// already satisfy the constraint.
    pub fn with_support(mut self, support: Support) -> Result<Self> {
        let ok = match support {
            Support::Unbounded => true,
            Support::Negative => self.mu_plus < 0.0,
            Support::Positive => self.mu_minus > 0.0,
        };
        if !ok {
            return Err(Error::Constraint(format!(
                "{support:?} support requires the conditional means on that side of zero, \
                 got mu_minus={}, estimate={}, mu_plus={}",
                self.mu_minus, self.estimate, self.mu_plus
            )));
        }
        self.support = support;
        Ok(self)
    }

    /// One observation. The weight applied to `x` is `lambda * a` when `x`
    /// lies above the current estimate and `lambda * (1 - a)` otherwise, where
    /// `a = (q / gap_plus) / (q / gap_plus + (1 - q) / gap_minus)` comes from
    /// the current conditional-mean gaps. Balancing the expected up and down
    /// moves this way puts the fixed point at the `q` quantile.
    pub fn update(&mut self, x: f64) {
        let a = self.mixing();
        let below = if x <= self.estimate { 1.0 } else { 0.0 };
        let weight = self.lambda * (a + below * (1.0 - 2.0 * a));
        self.advance(x, weight);
        self.weight = weight;
    }

    /// Advances the recursion with a caller-supplied weight and leaves the
    /// adaptive weight untouched. With a constant weight the estimate is a
    /// plain EWA of the inputs.
    pub fn update_with_weight(&mut self, x: f64, weight: f64) {
        self.advance(x, weight);
    }

    /// Applies the estimate and conditional-mean updates.
    fn advance(&mut self, x: f64, weight: f64) {
        let old = self.estimate;
        let new = (1.0 - weight) * old + weight * x;
        let shift = new - old;
        if x > old {
            self.mu_plus = shift + (1.0 - self.rho) * self.mu_plus + self.rho * x;
            self.mu_minus += shift;
        } else {
            self.mu_plus += shift;
            self.mu_minus = shift + (1.0 - self.rho) * self.mu_minus + self.rho * x;
        }
        self.estimate = new;
        self.guard();
    }

    fn guard(&mut self) {
        match self.support {
            Support::Unbounded => {}
            Support::Negative => {
                if self.mu_plus >= 0.0 {
                    self.mu_plus = 0.5 * self.estimate;
                }
            }
            Support::Positive => {
                if self.mu_minus <= 0.0 {
                    self.mu_minus = 0.5 * self.estimate;
                }
            }
        }
        let eps = 1e-12 * self.estimate.abs().max(1.0);
        if self.mu_plus - self.estimate <= eps {
            self.mu_plus = self.estimate + eps;
        }
        if self.estimate - self.mu_minus <= eps {
            self.mu_minus = self.estimate - eps;
        }
    }

    fn mixing(&self) -> f64 {
        let up = self.q / (self.mu_plus - self.estimate);
        let down = (1.0 - self.q) / (self.estimate - self.mu_minus);
        up / (up + down)
    }

    pub fn estimate(&self) -> f64 {
        self.estimate
    }

    pub fn mu_minus(&self) -> f64 {
        self.mu_minus
    }

    pub fn mu_plus(&self) -> f64 {
        self.mu_plus
    }

    /// Weight applied by the most recent update.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn support(&self) -> Support {
        self.support
    }
}
