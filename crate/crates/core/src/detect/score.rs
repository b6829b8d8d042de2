use serde::{Deserialize, Serialize};

/// Precision, recall and F1 of a set of detections against true change
/// times, plus the mean delay of the credited detections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Mean time from a true change to its credited detection; `None` when
    /// nothing was credited.
    pub mean_delay: Option<f64>,
    pub detections: usize,
    pub correct: usize,
    pub true_changes: usize,
}

/// Scores detections against true change times (both ascending).
///
/// Only the first detection after a true change and before the next one is
/// credited; later detections in the same interval, and detections before
/// the first change, count as false. With `tolerance`, a first detection
/// more than `tolerance` after its change is also false. With no
/// detections precision is 0.
pub fn score(detections: &[f64], truth: &[f64], tolerance: Option<f64>) -> ScoreReport {
    debug_assert!(detections.windows(2).all(|w| w[0] <= w[1]));
    debug_assert!(truth.windows(2).all(|w| w[0] <= w[1]));
    let mut credited = vec![false; truth.len()];
    let mut correct = 0usize;
    let mut delay_sum = 0.0;
    for &d in detections {
        // last change at or before d
        let seg = truth.partition_point(|&t| t <= d);
        if seg == 0 {
            continue;
        }
        let i = seg - 1;
        let delay = d - truth[i];
        if credited[i] || tolerance.is_some_and(|w| delay > w) {
            continue;
        }
        credited[i] = true;
        correct += 1;
        delay_sum += delay;
    }
    let precision = if detections.is_empty() {
        0.0
    } else {
        correct as f64 / detections.len() as f64
    };
    let recall = if truth.is_empty() {
        0.0
    } else {
        correct as f64 / truth.len() as f64
    };
    let f1 = if precision > 0.0 && recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    ScoreReport {
        precision,
        recall,
        f1,
        mean_delay: (correct > 0).then(|| delay_sum / correct as f64),
        detections: detections.len(),
        correct,
        true_changes: truth.len(),
    }
}

impl ScoreReport {
    /// Pools reports scored on separate timelines (for example one per user)
    /// by summing their counts; the delay is averaged over all credited
    /// detections.
    pub fn combine(reports: &[ScoreReport]) -> ScoreReport {
        let detections: usize = reports.iter().map(|r| r.detections).sum();
        let correct: usize = reports.iter().map(|r| r.correct).sum();
        let true_changes: usize = reports.iter().map(|r| r.true_changes).sum();
        let delay_sum: f64 = reports
            .iter()
            .filter_map(|r| r.mean_delay.map(|d| d * r.correct as f64))
            .sum();
        let precision = if detections == 0 { 0.0 } else { correct as f64 / detections as f64 };
        let recall = if true_changes == 0 { 0.0 } else { correct as f64 / true_changes as f64 };
        let f1 = if precision > 0.0 && recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        ScoreReport {
            precision,
            recall,
            f1,
            mean_delay: (correct > 0).then(|| delay_sum / correct as f64),
            detections,
            correct,
            true_changes,
        }
    }
}
