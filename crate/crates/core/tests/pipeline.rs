//! End-to-end flows across modules: generate, record, reload, estimate.

mod common;

use corrsounder::correlator::{calibrate_b2b, compute_cir, CalibrationOptions, Capture, WindowSpec};
use corrsounder::frontend::{apply_channel, ChannelModel, NormalizedLink, SimulatedReceiver, Tap};
use corrsounder::fzc::{generate_fzc, FzcSpec};
use corrsounder::harness::{load_iq, store_iq, IqMetadata};
use corrsounder::metrics::{idr, psr};
use corrsounder::{amplitude_db, Complex64};

fn unit_power_system() -> ChannelModel {
    let raw = [
        (0, Complex64::new(1.0, 0.0)),
        (1, Complex64::from_polar(0.2, 0.7)),
        (2, Complex64::new(0.05, 0.0)),
    ];
    let norm = raw.iter().map(|(_, g)| g.norm_sqr()).sum::<f64>().sqrt();
    ChannelModel::new(raw.iter().map(|&(delay, g)| Tap { delay, gain: g / norm }).collect()).unwrap()
}

#[test]
fn recorded_capture_yields_the_channel_taps() {
    let spec = FzcSpec::new(1024, 1).unwrap();
    let tx = generate_fzc(&spec, 1e6).unwrap();
    let channel = ChannelModel::new(vec![
        Tap { delay: 0, gain: Complex64::new(1.0, 0.0) },
        Tap { delay: 100, gain: Complex64::new(0.0, 0.01) },
    ])
    .unwrap();
    let rx = apply_channel(&tx, &channel).unwrap().repeat(4);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rx.iq");
    let meta = IqMetadata::for_capture(&Capture::new(rx.clone(), spec, 4).unwrap());
    store_iq(&rx, &path, &meta).unwrap();
    let capture = load_iq(&path).unwrap();
    assert_eq!(capture.periods(), 4);
    assert_eq!(capture.spec(), &spec);

    let cir = compute_cir(&capture, &tx, None, WindowSpec::Rectangular).unwrap();
    let mags = cir.magnitudes();
    // f32 storage limits agreement to single precision
    assert!((mags[0] - 1.0).abs() < 1e-5);
    assert!((mags[100] - 0.01).abs() < 1e-6);
    assert!((cir.delay_of(100) - 1e-4).abs() < 1e-15);

    let report = psr(&cir, 0).unwrap();
    assert_eq!(report.peak_index, 0);
    assert!(report.psr_db > 100.0);
    let range = idr(&cir, &[0, 100], 0).unwrap();
    assert!(range > 100.0, "idr {range}");
}

#[test]
fn rectangular_cir_agrees_with_direct_correlation() {
    let spec = FzcSpec::new(257, 3).unwrap();
    let tx = generate_fzc(&spec, 1.0).unwrap();
    let channel = unit_power_system();
    let rx = apply_channel(&tx, &channel).unwrap();
    let capture = Capture::new(rx.clone(), spec, 1).unwrap();
    let cir = compute_cir(&capture, &tx, None, WindowSpec::Rectangular).unwrap();
    let slow = common::direct_xcorr(rx.samples(), tx.samples());
    for (a, b) in cir.taps().iter().zip(&slow) {
        assert!((a - b).norm() < 1e-12);
    }
}

#[test]
fn back_to_back_calibration_removes_the_system_response() {
    let spec = FzcSpec::new(4096, 1).unwrap();
    let tx = generate_fzc(&spec, 2e9).unwrap();
    let system = unit_power_system();
    let rx = SimulatedReceiver::new(&tx, 1.0, None).unwrap();
    let link = NormalizedLink::noiseless();

    let b2b = rx.receive(&system, &link, 2, 0).unwrap();
    let b2b = Capture::new(b2b, spec, 2).unwrap();
    let cal = calibrate_b2b(&b2b, &tx, 30.0, CalibrationOptions::default()).unwrap();

    // measurement: the same system followed by a two-path channel
    let taps = system.taps();
    let mut combined = Vec::new();
    for &(delay, g) in &[(0usize, 1.0), (37, 0.1)] {
        for t in taps {
            combined.push((t.delay + delay, t.gain * g));
        }
    }
    combined.sort_by_key(|t| t.0);
    let channel = ChannelModel::new(combined.into_iter().map(|(delay, gain)| Tap { delay, gain }).collect()).unwrap();
    let meas = Capture::new(rx.receive(&channel, &link, 2, 0).unwrap(), spec, 2).unwrap();

    let raw = compute_cir(&meas, &tx, None, WindowSpec::Rectangular).unwrap();
    let cir = compute_cir(&meas, &tx, Some(&cal), WindowSpec::Rectangular).unwrap();
    let mags = cir.magnitudes();
    assert!((amplitude_db(mags[0]) + 30.0).abs() < 1e-9);
    assert!((amplitude_db(mags[37]) + 50.0).abs() < 1e-9);
    // uncalibrated, the system's second tap leaks into bin 1
    assert!(raw.magnitudes()[1] > 0.1 * raw.magnitudes()[0]);
    assert!(mags[1] < 1e-9 * mags[0]);
    assert_eq!(cir.metadata.get("calibrated").map(String::as_str), Some("true"));
}
