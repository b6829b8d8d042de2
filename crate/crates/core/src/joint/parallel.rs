use serde::{Deserialize, Serialize};

use super::grid::QuantileGrid;
use crate::error::{Error, Result};
use crate::estimators::Dumiqe;

/// One independent multiplicative estimator per probability. Provides no
/// ordering guarantee and exists to demonstrate crossing estimates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParallelDumiqe {
    grid: QuantileGrid,
    offset: f64,
    states: Vec<Dumiqe>,
    estimates: Vec<f64>,
}

impl ParallelDumiqe {
    /// `initial` only needs to be non-decreasing.
    pub fn new(grid: QuantileGrid, lambda: f64, offset: f64, initial: &[f64]) -> Result<Self> {
        if initial.len() != grid.len() {
            return Err(Error::Constraint(format!(
                "expected {} initial estimates, got {}",
                grid.len(),
                initial.len()
            )));
        }
        if initial.iter().any(|v| !v.is_finite()) || initial.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Constraint(
                "initial estimates must be finite and non-decreasing".into(),
            ));
        }
        let states = grid
            .probs()
            .iter()
            .zip(initial)
            .map(|(&q, &v)| Dumiqe::new(q, lambda, v + offset))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid,
            offset,
            states,
            estimates: initial.to_vec(),
        })
    }

    pub fn step(&mut self, x: f64) -> &[f64] {
        let z = x + self.offset;
        for (state, out) in self.states.iter_mut().zip(self.estimates.iter_mut()) {
            state.update(z);
            *out = state.estimate() - self.offset;
        }
        &self.estimates
    }

    pub fn estimates(&self) -> &[f64] {
        &self.estimates
    }

    pub fn grid(&self) -> &QuantileGrid {
        &self.grid
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_step() {
        let grid = QuantileGrid::new(vec![0.4, 0.5, 0.6]).unwrap();
        let mut t = ParallelDumiqe::new(grid, 0.1, 0.0, &[4.0, 5.0, 6.0]).unwrap();
        let est = t.step(5.5).to_vec();
        // 4 * 1.04, 5 * 1.05, 6 * (1 - 0.1 * 0.4)
        assert!((est[0] - 4.16).abs() < 1e-12);
        assert!((est[1] - 5.25).abs() < 1e-12);
        assert!((est[2] - 5.76).abs() < 1e-12);
    }

    #[test]
    fn uniform_decrease_keeps_order() {
        let grid = QuantileGrid::new(vec![0.4, 0.5, 0.6]).unwrap();
        let mut t = ParallelDumiqe::new(grid, 0.1, 0.0, &[4.0, 5.0, 6.0]).unwrap();
        let est = t.step(1.0).to_vec();
        assert!(est.iter().zip(&[4.0, 5.0, 6.0]).all(|(n, o)| n < o));
        assert!(est[0] < est[1] && est[1] < est[2]);
    }
}
