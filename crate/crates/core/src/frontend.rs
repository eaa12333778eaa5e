//! Generalized digital receiver model.
//!
//! The chain is `channel → gain → thermal + intrinsic noise → limiter →
//! quantizer`. Everything ahead of the quantizer collapses into two numbers:
//! the received SNR `snr_r` and the achievable SNR `snr_a` reached at the edge
//! of the linear region. The simulation core therefore works in
//! full-scale-relative units: a signal at full scale has its interpolated
//! peak envelope exactly at the quantizer full scale `L0`, the noise floor is
//! fixed at `snr_a` below that signal's mean power, and `snr_r` is set by
//! backoff and channel gain. There is no automatic gain control.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fzc::{self, FzcError};
use crate::signal::ComplexSequence;
use crate::{db_to_amplitude, db_to_power};

/// Thermal noise density referred to the receiver input, dBm/Hz.
pub const THERMAL_NOISE_DENSITY_DBM_HZ: f64 = -174.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrontendError {
    #[error("input power {input_dbm} dBm exceeds the linear limit {max_dbm} dBm; the limiter will clip")]
    Overload { input_dbm: f64, max_dbm: f64 },
    #[error("tap delay {delay} is outside a period of {len} samples")]
    DelayOutOfRange { delay: usize, len: usize },
    #[error("channel taps must be nonempty with strictly increasing delays")]
    InvalidChannel,
    #[error("received SNR {snr_r} dB exceeds achievable SNR {snr_a} dB")]
    SnrAboveAchievable { snr_r: f64, snr_a: f64 },
    #[error("invalid receiver parameter: {0}")]
    InvalidReceiver(String),
    #[error("periods must be at least 1")]
    InvalidPeriods,
    #[error(transparent)]
    Waveform(#[from] FzcError),
}

/// Noise power in dBm of a bandwidth `B` at the thermal floor.
///
/// `B` must be positive; other values yield NaN.
pub fn thermal_noise_power(bandwidth_hz: f64) -> f64 {
    THERMAL_NOISE_DENSITY_DBM_HZ + 10.0 * bandwidth_hz.log10()
}

/// One discrete channel path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tap {
    pub delay: usize,
    pub gain: Complex64,
}

/// Discrete tapped-delay-line channel applied circularly to a periodic signal.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    taps: Vec<Tap>,
}

impl ChannelModel {
    pub fn new(taps: Vec<Tap>) -> Result<Self, FrontendError> {
        if taps.is_empty() || taps.windows(2).any(|w| w[0].delay >= w[1].delay) {
            return Err(FrontendError::InvalidChannel);
        }
        Ok(Self { taps })
    }

    pub fn identity() -> Self {
        Self {
            taps: vec![Tap {
                delay: 0,
                gain: Complex64::new(1.0, 0.0),
            }],
        }
    }

    /// A single path with the given delay and power gain in dB.
    pub fn single_tap(delay: usize, gain_db: f64) -> Self {
        Self {
            taps: vec![Tap {
                delay,
                gain: Complex64::new(db_to_amplitude(gain_db), 0.0),
            }],
        }
    }

    /// A flat attenuator, as emulated by a step attenuator in a conducted setup.
    pub fn attenuator(attenuation_db: f64) -> Self {
        Self::single_tap(0, -attenuation_db)
    }

    pub fn taps(&self) -> &[Tap] {
        &self.taps
    }
}

/// Uniform quantizer characteristic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuantizerKind {
    /// Levels at odd multiples of Δ/2, no zero code.
    #[default]
    MidRise,
    /// Levels at integer multiples of Δ, including zero.
    MidTread,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantizer {
    pub bits: u32,
    pub kind: QuantizerKind,
}

impl Quantizer {
    pub fn mid_rise(bits: u32) -> Self {
        Self {
            bits,
            kind: QuantizerKind::MidRise,
        }
    }

    /// LSB size for full scale `fullscale`: `Δ = 2^(1-L)·L0`.
    pub fn step(&self, fullscale: f64) -> f64 {
        fullscale * 2f64.powi(1 - self.bits as i32)
    }
}

/// Parameters of the receiver chain in absolute units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverModel {
    pub bandwidth_hz: f64,
    pub gain_db: f64,
    pub noise_figure_db: f64,
    pub max_input_dbm: f64,
    /// `None` means continuous amplitude.
    pub quantizer_bits: Option<u32>,
    #[serde(default = "default_fullscale")]
    pub fullscale: f64,
}

fn default_fullscale() -> f64 {
    1.0
}

impl ReceiverModel {
    pub fn validate(&self) -> Result<(), FrontendError> {
        let bad = |msg: &str| Err(FrontendError::InvalidReceiver(msg.to_owned()));
        if !(self.bandwidth_hz.is_finite() && self.bandwidth_hz > 0.0) {
            return bad("bandwidth must be positive");
        }
        if !(self.fullscale.is_finite() && self.fullscale > 0.0) {
            return bad("full scale must be positive");
        }
        if self.quantizer_bits == Some(0) {
            return bad("quantizer needs at least one bit");
        }
        if !(self.gain_db.is_finite()
            && self.noise_figure_db.is_finite()
            && self.noise_figure_db >= 0.0
            && self.max_input_dbm.is_finite())
        {
            return bad("gain, noise figure and maximum input must be finite (NF >= 0)");
        }
        Ok(())
    }

    /// Thermal noise at the input, dBm.
    pub fn input_noise_dbm(&self) -> f64 {
        thermal_noise_power(self.bandwidth_hz)
    }

    /// Output noise `N_q = G·N0 + N_i` with `N_i = G·N0·(F-1)`, dBm.
    pub fn output_noise_dbm(&self) -> f64 {
        self.gain_db + self.input_noise_dbm() + self.noise_figure_db
    }

    /// Achievable SNR `S_q,max / N_q`, dB.
    pub fn achievable_snr_db(&self) -> f64 {
        self.gain_db + self.max_input_dbm - self.output_noise_dbm()
    }
}

/// The receiver reduced to received and achievable SNR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalizedLink {
    snr_r_db: f64,
    snr_a_db: f64,
}

impl NormalizedLink {
    /// `snr_a_db` may be `+∞` for a noiseless chain.
    pub fn new(snr_r_db: f64, snr_a_db: f64) -> Result<Self, FrontendError> {
        if snr_r_db.is_nan() || snr_a_db.is_nan() || snr_r_db > snr_a_db {
            return Err(FrontendError::SnrAboveAchievable {
                snr_r: snr_r_db,
                snr_a: snr_a_db,
            });
        }
        Ok(Self { snr_r_db, snr_a_db })
    }

    /// Full-scale operation: `snr_r = snr_a`.
    pub fn full_scale(snr_a_db: f64) -> Self {
        Self {
            snr_r_db: snr_a_db,
            snr_a_db,
        }
    }

    /// No noise at all.
    pub fn noiseless() -> Self {
        Self::full_scale(f64::INFINITY)
    }

    pub fn snr_r_db(&self) -> f64 {
        self.snr_r_db
    }

    pub fn snr_a_db(&self) -> f64 {
        self.snr_a_db
    }

    /// Signal level below full scale, dB.
    pub fn backoff_db(&self) -> f64 {
        if self.snr_a_db.is_infinite() && self.snr_r_db.is_infinite() {
            0.0
        } else {
            self.snr_a_db - self.snr_r_db
        }
    }
}

/// Maps an absolute input level onto the normalized link.
pub fn derive_link(rx: &ReceiverModel, input_power_dbm: f64) -> Result<NormalizedLink, FrontendError> {
    rx.validate()?;
    if input_power_dbm > rx.max_input_dbm {
        return Err(FrontendError::Overload {
            input_dbm: input_power_dbm,
            max_dbm: rx.max_input_dbm,
        });
    }
    let snr_a = rx.achievable_snr_db();
    NormalizedLink::new(snr_a - (rx.max_input_dbm - input_power_dbm), snr_a)
}

/// Circular FIR filtering of one signal period by the channel taps.
pub fn apply_channel(
    signal: &ComplexSequence,
    channel: &ChannelModel,
) -> Result<ComplexSequence, FrontendError> {
    let out = apply_channel_slice(signal.samples(), channel)?;
    Ok(ComplexSequence::from_parts(out, signal.sample_rate()))
}

pub(crate) fn apply_channel_slice(
    input: &[Complex64],
    channel: &ChannelModel,
) -> Result<Vec<Complex64>, FrontendError> {
    let len = input.len();
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for tap in &channel.taps {
        if tap.delay >= len {
            return Err(FrontendError::DelayOutOfRange {
                delay: tap.delay,
                len,
            });
        }
        for (n, o) in out.iter_mut().enumerate() {
            *o += tap.gain * input[(n + len - tap.delay) % len];
        }
    }
    Ok(out)
}

/// Adds circularly-symmetric complex Gaussian noise of the given power
/// (dB relative to unit power). `-∞` leaves the signal untouched.
pub fn add_noise(signal: &ComplexSequence, noise_power_db: f64, rng_seed: u64) -> ComplexSequence {
    let mut samples = signal.samples().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    add_noise_in_place(&mut samples, db_to_power(noise_power_db), &mut rng);
    ComplexSequence::from_parts(samples, signal.sample_rate())
}

pub(crate) fn add_noise_in_place<R: Rng>(samples: &mut [Complex64], noise_power: f64, rng: &mut R) {
    if noise_power <= 0.0 {
        return;
    }
    let sigma = (noise_power / 2.0).sqrt();
    for s in samples {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *s += Complex64::new(sigma * re, sigma * im);
    }
}

/// Scales every sample whose magnitude exceeds `ceiling` back onto it,
/// keeping the phase.
pub fn limit(signal: &ComplexSequence, ceiling: f64) -> ComplexSequence {
    let mut samples = signal.samples().to_vec();
    limit_in_place(&mut samples, ceiling);
    ComplexSequence::from_parts(samples, signal.sample_rate())
}

pub(crate) fn limit_in_place(samples: &mut [Complex64], ceiling: f64) {
    for s in samples {
        let mag = s.norm();
        if mag > ceiling {
            *s *= ceiling / mag;
        }
    }
}

/// Uniform quantization of real and imaginary parts independently,
/// saturating at the outermost code.
pub fn quantize(signal: &ComplexSequence, quantizer: Quantizer, fullscale: f64) -> ComplexSequence {
    let mut samples = signal.samples().to_vec();
    quantize_in_place(&mut samples, quantizer, fullscale);
    ComplexSequence::from_parts(samples, signal.sample_rate())
}

pub(crate) fn quantize_in_place(samples: &mut [Complex64], quantizer: Quantizer, fullscale: f64) {
    let step = quantizer.step(fullscale);
    let q: fn(f64, f64, f64) -> f64 = match quantizer.kind {
        QuantizerKind::MidRise => quantize_mid_rise,
        QuantizerKind::MidTread => quantize_mid_tread,
    };
    for s in samples {
        *s = Complex64::new(q(s.re, step, fullscale), q(s.im, step, fullscale));
    }
}

#[inline]
fn quantize_mid_rise(x: f64, step: f64, fullscale: f64) -> f64 {
    let top = fullscale - step / 2.0;
    (step * ((x / step).floor() + 0.5)).clamp(-top, top)
}

#[inline]
fn quantize_mid_tread(x: f64, step: f64, fullscale: f64) -> f64 {
    (step * (x / step).round()).clamp(-fullscale, fullscale - step)
}

/// Receiver chain with the full-scale scaling of a given waveform resolved.
///
/// Construction interpolates the waveform once to find its analog peak
/// envelope; [`SimulatedReceiver::receive`] can then be called repeatedly.
#[derive(Debug, Clone)]
pub struct SimulatedReceiver {
    tx: ComplexSequence,
    fullscale: f64,
    quantizer: Option<Quantizer>,
    full_scale_amplitude: f64,
    full_scale_power: f64,
}

impl SimulatedReceiver {
    pub fn new(
        tx: &ComplexSequence,
        fullscale: f64,
        quantizer: Option<Quantizer>,
    ) -> Result<Self, FrontendError> {
        if !(fullscale.is_finite() && fullscale > 0.0) {
            return Err(FrontendError::InvalidReceiver(
                "full scale must be positive".into(),
            ));
        }
        if quantizer.is_some_and(|q| q.bits == 0) {
            return Err(FrontendError::InvalidReceiver(
                "quantizer needs at least one bit".into(),
            ));
        }
        let crest = fzc::crest_factor_db(tx, fzc::DEFAULT_CREST_OVERSAMPLING)?;
        let peak_envelope_power = tx.mean_power() * db_to_power(crest);
        let full_scale_amplitude = fullscale / peak_envelope_power.sqrt();
        Ok(Self {
            tx: tx.clone(),
            fullscale,
            quantizer,
            full_scale_amplitude,
            full_scale_power: full_scale_amplitude.powi(2) * tx.mean_power(),
        })
    }

    /// Scale factor that puts the waveform's interpolated peak at full scale.
    pub fn full_scale_amplitude(&self) -> f64 {
        self.full_scale_amplitude
    }

    /// Mean power of the waveform at full scale.
    pub fn full_scale_power(&self) -> f64 {
        self.full_scale_power
    }

    /// Output noise power for a given achievable SNR.
    pub fn noise_power(&self, snr_a_db: f64) -> f64 {
        if snr_a_db == f64::INFINITY {
            0.0
        } else {
            self.full_scale_power / db_to_power(snr_a_db)
        }
    }

    pub fn receive(
        &self,
        channel: &ChannelModel,
        link: &NormalizedLink,
        periods: usize,
        rng_seed: u64,
    ) -> Result<ComplexSequence, FrontendError> {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let samples = self.receive_with(channel, link, periods, &mut rng)?;
        Ok(ComplexSequence::from_parts(samples, self.tx.sample_rate()))
    }

    pub(crate) fn receive_with<R: Rng>(
        &self,
        channel: &ChannelModel,
        link: &NormalizedLink,
        periods: usize,
        rng: &mut R,
    ) -> Result<Vec<Complex64>, FrontendError> {
        if periods == 0 {
            return Err(FrontendError::InvalidPeriods);
        }
        let mut period = apply_channel_slice(self.tx.samples(), channel)?;
        let scale = self.full_scale_amplitude * db_to_amplitude(-link.backoff_db());
        period.iter_mut().for_each(|s| *s *= scale);
        let mut samples = period.repeat(periods);
        add_noise_in_place(&mut samples, self.noise_power(link.snr_a_db()), rng);
        limit_in_place(&mut samples, self.fullscale);
        if let Some(q) = self.quantizer {
            quantize_in_place(&mut samples, q, self.fullscale);
        }
        Ok(samples)
    }
}

/// Runs the full receiver chain on `periods` repetitions of `tx`.
pub fn simulate_receive(
    tx: &ComplexSequence,
    channel: &ChannelModel,
    link: &NormalizedLink,
    quantizer: Option<Quantizer>,
    fullscale: f64,
    periods: usize,
    rng_seed: u64,
) -> Result<ComplexSequence, FrontendError> {
    SimulatedReceiver::new(tx, fullscale, quantizer)?.receive(channel, link, periods, rng_seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fzc::{generate_fzc, FzcSpec};

    fn seq(values: &[(f64, f64)]) -> ComplexSequence {
        ComplexSequence::new(
            values.iter().map(|&(r, i)| Complex64::new(r, i)).collect(),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn thermal_noise_examples() {
        assert!((thermal_noise_power(1.0) + 174.0).abs() < 1e-12);
        assert!((thermal_noise_power(2e9) + 80.99).abs() < 0.01);
        assert!((thermal_noise_power(1e6) + 114.0).abs() < 1e-12);
    }

    fn receiver() -> ReceiverModel {
        ReceiverModel {
            bandwidth_hz: 2e9,
            gain_db: 0.0,
            noise_figure_db: 0.0,
            max_input_dbm: 0.0,
            quantizer_bits: None,
            fullscale: 1.0,
        }
    }

    #[test]
    fn noiseless_receiver_achievable_snr() {
        let link = derive_link(&receiver(), 0.0).unwrap();
        assert!((link.snr_a_db() - 81.0).abs() < 0.02);
        assert_eq!(link.snr_r_db(), link.snr_a_db());
    }

    #[test]
    fn backoff_lowers_received_snr_only() {
        let rx = ReceiverModel {
            gain_db: 30.0,
            noise_figure_db: 6.0,
            max_input_dbm: -20.0,
            ..receiver()
        };
        let full = derive_link(&rx, -20.0).unwrap();
        let backed = derive_link(&rx, -30.0).unwrap();
        assert_eq!(full.snr_a_db(), backed.snr_a_db());
        assert!((backed.snr_r_db() - (full.snr_a_db() - 10.0)).abs() < 1e-12);
        assert!((full.snr_a_db() - (-20.0 + 80.99 - 6.0)).abs() < 0.01);
    }

    #[test]
    fn overload_is_reported() {
        assert!(matches!(
            derive_link(&receiver(), 1.0),
            Err(FrontendError::Overload { .. })
        ));
    }

    #[test]
    fn link_invariant() {
        assert!(NormalizedLink::new(41.0, 40.0).is_err());
        assert!(NormalizedLink::new(f64::NAN, 40.0).is_err());
        assert_eq!(NormalizedLink::new(30.0, 40.0).unwrap().backoff_db(), 10.0);
        assert_eq!(NormalizedLink::noiseless().backoff_db(), 0.0);
    }

    #[test]
    fn channel_validation() {
        assert!(ChannelModel::new(vec![]).is_err());
        let tap = |delay| Tap {
            delay,
            gain: Complex64::new(1.0, 0.0),
        };
        assert!(ChannelModel::new(vec![tap(2), tap(2)]).is_err());
        assert!(ChannelModel::new(vec![tap(0), tap(5)]).is_ok());
    }

    #[test]
    fn channel_identity_and_shift() {
        let x = seq(&[(1.0, 0.0), (2.0, 0.0), (3.0, 0.0), (4.0, 0.0), (5.0, 0.0)]);
        assert_eq!(apply_channel(&x, &ChannelModel::identity()).unwrap(), x);
        let ch = ChannelModel::new(vec![Tap {
            delay: 3,
            gain: Complex64::new(0.5, 0.0),
        }])
        .unwrap();
        let y = apply_channel(&x, &ch).unwrap();
        assert_eq!(y, x.circular_shift(3).scaled(0.5));
        let far = ChannelModel::single_tap(5, 0.0);
        assert_eq!(
            apply_channel(&x, &far),
            Err(FrontendError::DelayOutOfRange { delay: 5, len: 5 })
        );
    }

    #[test]
    fn noise_off_and_determinism() {
        let x = seq(&[(1.0, -1.0); 16]);
        assert_eq!(add_noise(&x, f64::NEG_INFINITY, 3), x);
        assert_eq!(add_noise(&x, -10.0, 3), add_noise(&x, -10.0, 3));
        assert_ne!(add_noise(&x, -10.0, 3), add_noise(&x, -10.0, 4));
    }

    #[test]
    fn noise_power_matches_request() {
        let zeros = ComplexSequence::new(vec![Complex64::new(0.0, 0.0); 1_000_000], 1.0).unwrap();
        let noisy = add_noise(&zeros, 0.0, 11);
        let p = noisy.mean_power();
        assert!((p - 1.0).abs() < 0.01, "{p}");
        let re: f64 = noisy.samples().iter().map(|s| s.re * s.re).sum::<f64>() / 1e6;
        assert!((re - 0.5).abs() < 0.01);
    }

    #[test]
    fn limiter_behaviour() {
        let x = seq(&[(2.0, 0.0), (0.0, 0.0), (0.3, 0.4), (-3.0, 4.0)]);
        let y = limit(&x, 1.0);
        let s = y.samples();
        assert!((s[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(s[1], Complex64::new(0.0, 0.0));
        assert_eq!(s[2], x.samples()[2]);
        assert!((s[3] - Complex64::new(-0.6, 0.8)).norm() < 1e-15);
    }

    #[test]
    fn quantizer_examples() {
        let q6 = Quantizer::mid_rise(6);
        assert_eq!(q6.step(1.0), 0.03125);
        let x = seq(&[(0.0, 2.0), (-2.0, 0.01)]);
        let y = quantize(&x, q6, 1.0);
        let s = y.samples();
        assert_eq!(s[0].re, 0.015625);
        assert_eq!(s[0].im, 0.984375);
        assert_eq!(s[1].re, -0.984375);
        assert_eq!(s[1].im, 0.015625);
        for bits in 1..=16 {
            let q = Quantizer::mid_rise(bits);
            let y = quantize(&seq(&[(0.0, -0.0)]), q, 1.0);
            assert_eq!(y.samples()[0].re.abs(), q.step(1.0) / 2.0);
        }
    }

    #[test]
    fn mid_tread_has_zero_code() {
        let q = Quantizer {
            bits: 4,
            kind: QuantizerKind::MidTread,
        };
        let y = quantize(&seq(&[(0.01, 5.0)]), q, 1.0);
        assert_eq!(y.samples()[0].re, 0.0);
        assert_eq!(y.samples()[0].im, 1.0 - 0.125);
    }

    #[test]
    fn full_scale_peak_envelope_sits_at_fullscale() {
        let tx = generate_fzc(&FzcSpec::new(1001, 1).unwrap(), 1.0).unwrap();
        let rx = SimulatedReceiver::new(&tx, 1.0, None).unwrap();
        let scaled = tx.scaled(rx.full_scale_amplitude());
        let interp = fzc::interpolate_periodic(&scaled, 8).unwrap();
        let peak = interp.iter().map(|x| x.norm()).fold(0.0, f64::max);
        assert!((peak - 1.0).abs() < 1e-9);
    }

    #[test]
    fn noiseless_unquantized_chain_repeats_the_scaled_waveform() {
        let tx = generate_fzc(&FzcSpec::new(64, 1).unwrap(), 1.0).unwrap();
        let rx = SimulatedReceiver::new(&tx, 1.0, None).unwrap();
        let out = rx
            .receive(&ChannelModel::identity(), &NormalizedLink::noiseless(), 3, 0)
            .unwrap();
        let expected = tx.scaled(rx.full_scale_amplitude()).repeat(3);
        assert_eq!(out.len(), 3 * 64);
        for (a, b) in out.samples().iter().zip(expected.samples()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn zero_periods_rejected() {
        let tx = generate_fzc(&FzcSpec::new(64, 1).unwrap(), 1.0).unwrap();
        let r = simulate_receive(
            &tx,
            &ChannelModel::identity(),
            &NormalizedLink::noiseless(),
            None,
            1.0,
            0,
            0,
        );
        assert_eq!(r, Err(FrontendError::InvalidPeriods));
    }
}
