mod common;

use corrsounder::correlator::periodic_xcorr;
use corrsounder::frontend::{limit, quantize, NormalizedLink, Quantizer, QuantizerKind};
use corrsounder::fzc::{generate_fzc, periodic_autocorrelation, FzcSpec};
use corrsounder::harness::{load_iq_samples, store_iq, IqMetadata};
use corrsounder::metrics::quantile;
use corrsounder::{Complex64, ComplexSequence};
use proptest::prelude::*;

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn fzc_spec(max_len: usize) -> impl Strategy<Value = FzcSpec> {
    (2..=max_len)
        .prop_flat_map(|n| (Just(n), 1..n))
        .prop_filter("coprime", |(n, r)| gcd(*n, *r) == 1)
        .prop_map(|(n, r)| FzcSpec::new(n, r).unwrap())
}

fn complex_vec(len: impl Into<proptest::collection::SizeRange>, bound: f64) -> impl Strategy<Value = Vec<Complex64>> {
    proptest::collection::vec((-bound..bound, -bound..bound).prop_map(|(r, i)| Complex64::new(r, i)), len)
}

fn quantizer() -> impl Strategy<Value = Quantizer> {
    (1u32..=16, prop_oneof![Just(QuantizerKind::MidRise), Just(QuantizerKind::MidTread)])
        .prop_map(|(bits, kind)| Quantizer { bits, kind })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fzc_samples_have_unit_magnitude(spec in fzc_spec(4096)) {
        let s = generate_fzc(&spec, 1.0).unwrap();
        prop_assert_eq!(s.len(), spec.length());
        for x in s.samples() {
            prop_assert!((x.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fzc_autocorrelation_is_perfect(spec in fzc_spec(4096)) {
        let s = generate_fzc(&spec, 1.0).unwrap();
        let r = periodic_autocorrelation(&s);
        let n = spec.length() as f64;
        prop_assert_eq!(r.samples()[0], Complex64::new(n, 0.0));
        for x in &r.samples()[1..] {
            prop_assert!(x.norm() < 1e-9 * n);
        }
    }

    #[test]
    fn generation_is_deterministic(spec in fzc_spec(2048)) {
        let a = generate_fzc(&spec, 1.0).unwrap();
        let b = generate_fzc(&spec, 1.0).unwrap();
        for (x, y) in a.samples().iter().zip(b.samples()) {
            prop_assert_eq!(x.re.to_bits(), y.re.to_bits());
            prop_assert_eq!(x.im.to_bits(), y.im.to_bits());
        }
    }

    #[test]
    fn acf_zero_lag_is_energy(v in complex_vec(1..300, 10.0)) {
        let s = ComplexSequence::new(v, 1.0).unwrap();
        let r = periodic_autocorrelation(&s);
        prop_assert_eq!(r.samples()[0].re, s.energy());
        prop_assert_eq!(r.samples()[0].im, 0.0);
    }

    #[test]
    fn fft_correlation_matches_direct_sum(
        rx in complex_vec(1..=256, 2.0),
        seed in any::<u64>(),
    ) {
        let n = rx.len();
        // reference: arbitrary nonzero sequence of the same length
        let reference: Vec<Complex64> = (0..n)
            .map(|i| Complex64::from_polar(1.0 + (i % 3) as f64, (seed.wrapping_add(i as u64) % 997) as f64))
            .collect();
        let fast = periodic_xcorr(
            &ComplexSequence::new(rx.clone(), 1.0).unwrap(),
            &ComplexSequence::new(reference.clone(), 1.0).unwrap(),
        )
        .unwrap();
        let slow = common::direct_xcorr(&rx, &reference);
        let scale = slow.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
        for (a, b) in fast.samples().iter().zip(&slow) {
            prop_assert!((a - b).norm() <= 1e-9 * scale, "{} vs {}", a, b);
        }
    }

    #[test]
    fn quantize_is_idempotent(v in complex_vec(1..200, 2.0), q in quantizer(), fs in 0.1f64..4.0) {
        let s = ComplexSequence::new(v, 1.0).unwrap();
        let once = quantize(&s, q, fs);
        let twice = quantize(&once, q, fs);
        prop_assert_eq!(once.samples(), twice.samples());
    }

    #[test]
    fn mid_rise_error_is_bounded(v in complex_vec(1..200, 1.0), bits in 1u32..=16) {
        let q = Quantizer::mid_rise(bits);
        let step = q.step(1.0);
        let top = 1.0 - step / 2.0;
        let s = ComplexSequence::new(v, 1.0).unwrap();
        let out = quantize(&s, q, 1.0);
        for (x, y) in s.samples().iter().zip(out.samples()) {
            for (a, b) in [(x.re, y.re), (x.im, y.im)] {
                prop_assert!(b.abs() <= top + 1e-15);
                if a.abs() <= top {
                    prop_assert!((a - b).abs() <= step / 2.0 + 1e-15);
                }
            }
        }
    }

    #[test]
    fn high_resolution_approaches_identity(v in complex_vec(1..100, 0.9)) {
        let q = Quantizer::mid_rise(20);
        let s = ComplexSequence::new(v, 1.0).unwrap();
        let out = quantize(&s, q, 1.0);
        for (x, y) in s.samples().iter().zip(out.samples()) {
            prop_assert!((x.re - y.re).abs() <= q.step(1.0) / 2.0 + 1e-15);
            prop_assert!((x.im - y.im).abs() <= q.step(1.0) / 2.0 + 1e-15);
        }
    }

    #[test]
    fn limiter_is_idempotent_and_non_expansive(v in complex_vec(1..200, 3.0), ceiling in 0.01f64..2.0) {
        let s = ComplexSequence::new(v, 1.0).unwrap();
        let once = limit(&s, ceiling);
        let twice = limit(&once, ceiling);
        // a second pass may only move samples by rounding error
        for (a, b) in once.samples().iter().zip(twice.samples()) {
            prop_assert!((a - b).norm() <= 4.0 * f64::EPSILON * ceiling);
        }
        for (x, y) in s.samples().iter().zip(once.samples()) {
            prop_assert!(y.norm() <= x.norm() + 1e-15);
            prop_assert!(y.norm() <= ceiling * (1.0 + 1e-12));
            if x.norm() > 0.0 {
                prop_assert!((x.arg() - y.arg()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn quantile_matches_sorted_reference(
        v in proptest::collection::vec(-1e6f64..1e6, 1..2000),
        q in 0.0f64..=1.0,
    ) {
        let fast = quantile(&v, q).unwrap();
        let slow = common::brute_quantile(&v, q);
        prop_assert!((fast - slow).abs() <= 1e-9 * slow.abs().max(1.0));
    }

    #[test]
    fn links_never_exceed_achievable_snr(a in -50.0f64..100.0, b in -50.0f64..100.0) {
        match NormalizedLink::new(a, b) {
            Ok(link) => prop_assert!(link.snr_r_db() <= link.snr_a_db()),
            Err(_) => prop_assert!(a > b),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn iq_round_trip_is_bit_exact_for_f32_data(
        v in proptest::collection::vec((any::<f32>(), any::<f32>()), 1..500),
        rate in 1.0f64..1e10,
    ) {
        let samples: Vec<Complex64> = v
            .iter()
            .filter(|(r, i)| r.is_finite() && i.is_finite())
            .map(|&(r, i)| Complex64::new(r as f64, i as f64))
            .collect();
        prop_assume!(!samples.is_empty());
        let seq = ComplexSequence::new(samples, rate).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.iq");
        store_iq(&seq, &path, &IqMetadata::for_sequence(&seq)).unwrap();
        let (back, meta) = load_iq_samples(&path).unwrap();
        prop_assert_eq!(meta.sample_rate, rate);
        prop_assert_eq!(back.len(), seq.len());
        for (a, b) in back.samples().iter().zip(seq.samples()) {
            prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
            prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }
}
