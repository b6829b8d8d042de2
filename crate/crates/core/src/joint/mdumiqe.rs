use serde::{Deserialize, Serialize};

use super::grid::QuantileGrid;
use super::shiftq::check_initial;
use crate::error::{Error, Result};
use crate::estimators::Dumiqe;

const MARGIN: f64 = 1e-6;

/// Independent multiplicative estimators whose steps are shortened whenever
/// a full step would collide with a neighbour.
///
/// Quantiles are processed in ascending order. Each proposed update must
/// stay strictly between the already-updated lower neighbour and the
/// not-yet-updated upper neighbour; when it would not, the step stops short
/// of the neighbour by a relative margin of `1e-6` of the remaining distance.
/// This is a heuristic baseline, not a reimplementation of any specific
/// published step-size schedule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mdumiqe {
    grid: QuantileGrid,
    offset: f64,
    states: Vec<Dumiqe>,
    estimates: Vec<f64>,
}

impl Mdumiqe {
    pub fn new(grid: QuantileGrid, lambda: f64, offset: f64, initial: &[f64]) -> Result<Self> {
        check_initial(&grid, initial)?;
        let states = grid
            .probs()
            .iter()
            .zip(initial)
            .map(|(&q, &v)| Dumiqe::new(q, lambda, v + offset))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::Constraint(format!("{e}; configure a larger offset")))?;
        Ok(Self {
            grid,
            offset,
            states,
            estimates: initial.to_vec(),
        })
    }

    pub fn step(&mut self, x: f64) -> &[f64] {
        let z = x + self.offset;
        let k_max = self.states.len();
        for k in 0..k_max {
            let old = self.states[k].estimate();
            let proposed = old * self.states[k].factor_for(z);
            let next = if proposed > old && k + 1 < k_max {
                let hi = self.states[k + 1].estimate();
                if proposed >= hi {
                    approach(old, hi)
                } else {
                    proposed
                }
            } else if proposed < old && k > 0 {
                let lo = self.states[k - 1].estimate();
                if proposed <= lo {
                    approach(old, lo)
                } else {
                    proposed
                }
            } else {
                proposed
            };
            self.states[k].set_estimate(next);
        }
        for (out, s) in self.estimates.iter_mut().zip(&self.states) {
            *out = s.estimate() - self.offset;
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

/// Moves from `old` towards `bound`, stopping `MARGIN` of the distance
/// short. Falls back to `old` when rounding would land on the bound.
fn approach(old: f64, bound: f64) -> f64 {
    let next = old + (bound - old) * (1.0 - MARGIN);
    let strictly_inside = if bound > old {
        next < bound && next >= old
    } else {
        next > bound && next <= old
    };
    if strictly_inside && next > 0.0 {
        next
    } else {
        old
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_quantile_matches_dumiqe() {
        let grid = QuantileGrid::new(vec![0.5]).unwrap();
        let mut t = Mdumiqe::new(grid, 0.05, 0.0, &[1.0]).unwrap();
        let mut d = Dumiqe::new(0.5, 0.05, 1.0).unwrap();
        for i in 0..500 {
            let x = ((i * 13) % 7) as f64 / 3.0;
            assert_eq!(t.step(x)[0], {
                d.update(x);
                d.estimate()
            });
        }
    }

    #[test]
    fn cap_inactive_when_far_apart() {
        let grid = QuantileGrid::new(vec![0.2, 0.5, 0.8]).unwrap();
        let init = [10.0, 20.0, 30.0];
        let mut t = Mdumiqe::new(grid.clone(), 0.01, 0.0, &init).unwrap();
        let mut ds: Vec<Dumiqe> = grid
            .probs()
            .iter()
            .zip(&init)
            .map(|(&q, &v)| Dumiqe::new(q, 0.01, v).unwrap())
            .collect();
        for x in [15.0, 25.0, 5.0, 35.0, 21.0] {
            let est = t.step(x).to_vec();
            for (d, e) in ds.iter_mut().zip(est) {
                d.update(x);
                assert_eq!(d.estimate(), e);
            }
        }
    }

    #[test]
    fn cap_binds_near_collision() {
        let grid = QuantileGrid::new(vec![0.4, 0.5, 0.6]).unwrap();
        let mut t = Mdumiqe::new(grid, 0.5, 0.0, &[1.0, 1.01, 1.02]).unwrap();
        // x between the lower two: 1.0 would grow by 20% and pass 1.01.
        let est = t.step(1.005).to_vec();
        assert!(est[0] < est[1] && est[1] < est[2], "{est:?}");
    }
}
