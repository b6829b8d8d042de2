use super::condq::Bracket;
use super::grid::QuantileGrid;
use crate::error::{Error, Result};

/// Linear-interpolation quantile of an ascending slice (the common "type 7"
/// definition: position `p * (n - 1)`).
pub fn empirical_quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Spacing used to break ties between equal empirical quantiles.
pub(crate) fn tie_epsilon(sorted: &[f64]) -> f64 {
    let range = sorted[sorted.len() - 1] - sorted[0];
    (1e-6 * range).max(1e-6)
}

pub(crate) fn sorted_samples(samples: &[f64], k: usize) -> Result<Vec<f64>> {
    if samples.len() < k + 1 {
        return Err(Error::InsufficientSamples {
            needed: k + 1,
            got: samples.len(),
        });
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Constraint("warmup samples must be finite".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(sorted)
}

/// Strictly increasing empirical quantiles for every grid probability.
pub(crate) fn spread_quantiles(sorted: &[f64], grid: &QuantileGrid) -> Vec<f64> {
    let eps = tie_epsilon(sorted);
    let mut out: Vec<f64> = grid
        .probs()
        .iter()
        .map(|&p| empirical_quantile(sorted, p))
        .collect();
    for k in 1..out.len() {
        if out[k] <= out[k - 1] {
            out[k] = out[k - 1] + eps;
        }
    }
    out
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Seeds for a conditional tracker: the central bracket in data units and
/// the per-quantile brackets of the shifted, truncated variables.
pub(crate) fn condq_brackets(sorted: &[f64], grid: &QuantileGrid, quantiles: &[f64]) -> Vec<Bracket> {
    let eps = tie_epsilon(sorted);
    let c = grid.center();
    let mut out = Vec::with_capacity(quantiles.len());
    for (k, &qk) in quantiles.iter().enumerate() {
        let b = if k == c {
            let below = mean(sorted.iter().copied().filter(|&v| v < qk));
            let above = mean(sorted.iter().copied().filter(|&v| v > qk));
            let spread = (sorted[sorted.len() - 1] - sorted[0]).max(eps);
            Bracket::new(
                below.filter(|m| *m < qk - eps).unwrap_or(qk - 0.5 * spread),
                qk,
                above.filter(|m| *m > qk + eps).unwrap_or(qk + 0.5 * spread),
            )
        } else if k < c {
            // y = x - Q(q_{k+1}) restricted to y < 0
            let inner = quantiles[k + 1];
            let est = qk - inner;
            let ys = || sorted.iter().map(move |&v| v - inner).filter(|&y| y < 0.0);
            let lo = mean(ys().filter(|&y| y < est)).filter(|m| *m < est - eps);
            let hi = mean(ys().filter(|&y| y > est)).filter(|m| *m > est + eps && *m < 0.0);
            Bracket::new(
                lo.unwrap_or(est * 1.5 - eps),
                est,
                hi.unwrap_or(0.5 * est),
            )
        } else {
            // y = x - Q(q_{k-1}) restricted to y > 0
            let inner = quantiles[k - 1];
            let est = qk - inner;
            let ys = || sorted.iter().map(move |&v| v - inner).filter(|&y| y > 0.0);
            let lo = mean(ys().filter(|&y| y < est)).filter(|m| *m > 0.0 && *m < est - eps);
            let hi = mean(ys().filter(|&y| y > est)).filter(|m| *m > est + eps);
            Bracket::new(lo.unwrap_or(0.5 * est), est, hi.unwrap_or(est * 1.5 + eps))
        };
        out.push(b);
    }
    out
}
