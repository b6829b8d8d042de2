use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};

/// Strictly increasing target probabilities with a designated central index.
///
/// The center is 0-based here. By default it is the probability closest to
/// 0.5, with ties going to the lower index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileGrid {
    probs: Vec<f64>,
    center: usize,
}

impl QuantileGrid {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        validate(&probs)?;
        let mut center = 0;
        for (i, p) in probs.iter().enumerate() {
            if (p - 0.5).abs() < (probs[center] - 0.5).abs() {
                center = i;
            }
        }
        Ok(Self { probs, center })
    }

    pub fn with_center(probs: Vec<f64>, center: usize) -> Result<Self> {
        validate(&probs)?;
        if center >= probs.len() {
            return Err(Error::Constraint(format!(
                "center index {center} out of range for {} probabilities",
                probs.len()
            )));
        }
        Ok(Self { probs, center })
    }

    /// `q_k = step * k` for `k = 1..=count`, e.g. `(0.05, 19)`.
    pub fn evenly_spaced(step: f64, count: usize) -> Result<Self> {
        Self::new((1..=count).map(|k| step * k as f64).collect())
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn center(&self) -> usize {
        self.center
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

fn validate(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::Constraint("quantile grid must not be empty".into()));
    }
    for &p in probs {
        check_probability("quantile probability", p)?;
    }
    if let Some(w) = probs.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::Constraint(format!(
            "quantile probabilities must be strictly increasing ({} >= {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_center() {
        assert_eq!(QuantileGrid::new(vec![0.2, 0.5, 0.8]).unwrap().center(), 1);
        assert_eq!(QuantileGrid::new(vec![0.1, 0.2]).unwrap().center(), 1);
        // 0.4 and 0.6 are equally close to 0.5
        assert_eq!(QuantileGrid::new(vec![0.4, 0.6]).unwrap().center(), 0);
        let g = QuantileGrid::evenly_spaced(0.05, 19).unwrap();
        assert_eq!(g.len(), 19);
        assert_eq!(g.center(), 9);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(QuantileGrid::new(vec![]).is_err());
        assert!(QuantileGrid::new(vec![0.5, 0.5]).is_err());
        assert!(QuantileGrid::new(vec![0.6, 0.5]).is_err());
        assert!(QuantileGrid::new(vec![0.0, 0.5]).is_err());
        assert!(QuantileGrid::with_center(vec![0.2, 0.5], 2).is_err());
    }
}
