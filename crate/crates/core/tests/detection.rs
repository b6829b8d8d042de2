use jointq::detect::synthetic::{labeled_stream, ChangeKind};
use jointq::detect::{score, Detection, Detector, DetectorConfig, DetectorMethod};

fn times(d: &[Detection]) -> Vec<f64> {
    d.iter().map(|d| d.time).collect()
}

fn run(config: DetectorConfig, samples: &[[f64; 3]]) -> Vec<Detection> {
    Detector::new(config).unwrap().run(samples).unwrap()
}

#[test]
fn variance_jump_detected_within_two_horizons() {
    let stream = labeled_stream(ChangeKind::Variance { ratio: 4.0 }, 2, 60.0, 20.0, 3);
    let config = DetectorConfig::default();
    let det = run(config.clone(), &stream.samples);
    let change = stream.change_times[0];
    let first_after = det.iter().find(|d| d.time >= change).expect("detection after the jump");
    assert!(
        first_after.time - change <= 2.0 * config.horizon_secs,
        "detected {} s after the change",
        first_after.time - change
    );
}

#[test]
fn moment_detector_quiet_on_stationary_stream() {
    let stream = labeled_stream(ChangeKind::MeanShift { shift: 0.0 }, 1, 1200.0, 20.0, 5);
    let config = DetectorConfig {
        method: DetectorMethod::Md,
        eta: 25.0,
        ..DetectorConfig::default()
    };
    assert!(run(config, &stream.samples).is_empty());
}

#[test]
fn mean_step_detected_by_both_detectors() {
    let stream = labeled_stream(ChangeKind::MeanShift { shift: 10.0 }, 2, 60.0, 20.0, 8);
    for method in [DetectorMethod::Md, DetectorMethod::EdCondQ, DetectorMethod::EdShiftQ] {
        let config = DetectorConfig {
            method,
            lambda: 0.005,
            nu: 0.005,
            xi: 0.001,
            horizon_secs: 0.5,
            ..DetectorConfig::default()
        };
        let det = run(config.clone(), &stream.samples);
        let change = stream.change_times[0];
        let first = det.iter().find(|d| d.time >= change).unwrap_or_else(|| panic!("{method} missed the step"));
        assert!(first.time - change <= 2.0 * config.horizon_secs, "{method}: {}", first.time - change);
    }
}

#[test]
fn shape_change_invisible_to_moments() {
    let stream = labeled_stream(ChangeKind::Shape, 10, 60.0, 20.0, 21);
    let ed = run(DetectorConfig::default(), &stream.samples);
    let md = run(
        DetectorConfig {
            method: DetectorMethod::Md,
            ..DetectorConfig::default()
        },
        &stream.samples,
    );
    let ed_f1 = score(&times(&ed), &stream.change_times, None).f1;
    let md_f1 = score(&times(&md), &stream.change_times, None).f1;
    assert!(ed_f1 > md_f1, "ED {ed_f1} vs MD {md_f1}");
}

#[test]
fn detections_are_deterministic() {
    let stream = labeled_stream(ChangeKind::Shape, 6, 60.0, 20.0, 2);
    let a = run(DetectorConfig::default(), &stream.samples);
    let b = run(DetectorConfig::default(), &stream.samples);
    assert_eq!(a, b);
}

#[test]
fn no_detection_before_buffer_refills() {
    let stream = labeled_stream(ChangeKind::MeanShift { shift: 10.0 }, 8, 60.0, 20.0, 4);
    let config = DetectorConfig {
        method: DetectorMethod::Md,
        nu: 0.005,
        xi: 0.001,
        horizon_secs: 0.5,
        ..DetectorConfig::default()
    };
    let det = run(config.clone(), &stream.samples);
    assert!(det.len() >= 4, "{det:?}");
    let quiet = (config.init_samples() + config.horizon_samples() + config.arm_samples()) as u64;
    for w in det.windows(2) {
        assert!(w[1].index - w[0].index > quiet);
    }
}
