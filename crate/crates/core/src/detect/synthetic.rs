//! Labelled three-axis streams with known change points.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use super::AXES;

/// What changes between consecutive segments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChangeKind {
    /// Segments alternate between a right-skewed and a left-skewed law with
    /// identical mean and variance (a standardised exponential and its
    /// mirror image).
    Shape,
    /// Gaussian segments whose mean alternates between the axis baseline and
    /// the baseline plus `shift` standard deviations.
    MeanShift { shift: f64 },
    /// Gaussian segments with a fixed mean whose standard deviation alternates
    /// between the axis scale and `ratio` times it.
    Variance { ratio: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledStream {
    pub samples: Vec<[f64; AXES]>,
    /// Times (seconds) at which a new segment starts, excluding time 0.
    pub change_times: Vec<f64>,
    pub sample_rate: f64,
}

/// Per-axis baseline and scale, loosely shaped like phone accelerometer
/// readings in m/s^2.
const BASE: [f64; AXES] = [0.5, 8.0, -1.0];
const SCALE: [f64; AXES] = [2.0, 3.0, 1.5];

/// `segments` consecutive segments of `segment_secs` seconds each at
/// `sample_rate` Hz.
pub fn labeled_stream(
    kind: ChangeKind,
    segments: usize,
    segment_secs: f64,
    sample_rate: f64,
    seed: u64,
) -> LabeledStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_segment = (segment_secs * sample_rate).round() as usize;
    let mut samples = Vec::with_capacity(segments * per_segment);
    let mut change_times = Vec::new();
    for seg in 0..segments {
        if seg > 0 {
            change_times.push(samples.len() as f64 / sample_rate);
        }
        let alt = seg % 2 == 1;
        for _ in 0..per_segment {
            let mut row = [0.0; AXES];
            for (w, v) in row.iter_mut().enumerate() {
                let z = match kind {
                    ChangeKind::Shape => {
                        let e: f64 = Exp1.sample(&mut rng);
                        if alt {
                            1.0 - e
                        } else {
                            e - 1.0
                        }
                    }
                    ChangeKind::MeanShift { shift } => {
                        let n: f64 = StandardNormal.sample(&mut rng);
                        n + if alt { shift } else { 0.0 }
                    }
                    ChangeKind::Variance { ratio } => {
                        let n: f64 = StandardNormal.sample(&mut rng);
                        n * if alt { ratio } else { 1.0 }
                    }
                };
                *v = BASE[w] + SCALE[w] * z;
            }
            samples.push(row);
        }
    }
    LabeledStream {
        samples,
        change_times,
        sample_rate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_segments_share_mean_and_variance() {
        let s = labeled_stream(ChangeKind::Shape, 2, 5000.0, 20.0, 1);
        let n = s.samples.len() / 2;
        assert_eq!(s.change_times, vec![5000.0]);
        for w in 0..AXES {
            let moments = |rows: &[[f64; AXES]]| {
                let m = rows.iter().map(|r| r[w]).sum::<f64>() / rows.len() as f64;
                let v = rows.iter().map(|r| (r[w] - m).powi(2)).sum::<f64>() / rows.len() as f64;
                let skew = rows.iter().map(|r| (r[w] - m).powi(3)).sum::<f64>()
                    / rows.len() as f64
                    / v.powf(1.5);
                (m, v, skew)
            };
            let (m0, v0, s0) = moments(&s.samples[..n]);
            let (m1, v1, s1) = moments(&s.samples[n..]);
            let se = SCALE[w] / (n as f64).sqrt();
            assert!((m0 - m1).abs() < 5.0 * se, "axis {w}: {m0} vs {m1}");
            assert!((v0 / v1 - 1.0).abs() < 0.1);
            assert!(s0 > 1.5 && s1 < -1.5);
        }
    }
}
