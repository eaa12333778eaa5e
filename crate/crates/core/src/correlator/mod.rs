//! From received sample streams to calibrated channel impulse responses.
//!
//! Post-processing follows the usual correlative sounder flow: coherently
//! average the `K` recorded periods, move to the frequency domain, apply the
//! back-to-back calibration and the pulse-forming window across the band,
//! correlate against the transmitted sequence and transform back.
//!
//! Correlation is normalized by the reference energy, so a received copy
//! `α·shift(ref, d)` yields a tap of value `α` at bin `d` and CIR magnitudes
//! read directly as channel gains.

mod window;

use std::collections::BTreeMap;
use std::io::{self, Write};

use num_complex::Complex64;
use thiserror::Error;

use crate::fft;
use crate::fzc::FzcSpec;
use crate::signal::ComplexSequence;

pub use window::{chebyshev_window, WindowSpec};

/// Default floor below the median bin under which a calibration bin is
/// considered unexcited.
pub const DEFAULT_CALIBRATION_FLOOR_DB: f64 = 60.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorrelatorError {
    #[error("length mismatch: expected {expected} samples, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("periods must be at least 1")]
    InvalidPeriods,
    #[error("calibration bin {bin} is {level_db:.1} dB below the median bin (floor {floor_db} dB)")]
    DegenerateBin {
        bin: usize,
        level_db: f64,
        floor_db: f64,
    },
    #[error("invalid window: {0:?}")]
    InvalidWindow(WindowSpec),
    #[error("reference sequence has zero energy")]
    ZeroReference,
}

/// A recorded stream of `K` received periods of a known FZC waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct Capture {
    samples: ComplexSequence,
    spec: FzcSpec,
    periods: usize,
    pub metadata: BTreeMap<String, String>,
}

impl Capture {
    pub fn new(samples: ComplexSequence, spec: FzcSpec, periods: usize) -> Result<Self, CorrelatorError> {
        if periods == 0 {
            return Err(CorrelatorError::InvalidPeriods);
        }
        let expected = periods * spec.length();
        if samples.len() != expected {
            return Err(CorrelatorError::LengthMismatch {
                expected,
                actual: samples.len(),
            });
        }
        Ok(Self {
            samples,
            spec,
            periods,
            metadata: BTreeMap::new(),
        })
    }

    pub fn with_metadata(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.metadata.insert(key.into(), value.to_string());
        self
    }

    pub fn samples(&self) -> &ComplexSequence {
        &self.samples
    }

    pub fn spec(&self) -> &FzcSpec {
        &self.spec
    }

    pub fn periods(&self) -> usize {
        self.periods
    }

    pub fn period_len(&self) -> usize {
        self.spec.length()
    }
}

/// Coherent mean of the `K` length-`N` segments of a capture.
pub fn average_periods(capture: &Capture) -> ComplexSequence {
    let avg = average_segments(capture.samples.samples(), capture.period_len());
    ComplexSequence::from_parts(avg, capture.samples.sample_rate())
}

pub(crate) fn average_segments(samples: &[Complex64], period: usize) -> Vec<Complex64> {
    let count = samples.len() / period;
    if count == 1 {
        return samples.to_vec();
    }
    let mut acc = vec![Complex64::new(0.0, 0.0); period];
    for chunk in samples.chunks_exact(period) {
        acc.iter_mut().zip(chunk).for_each(|(a, x)| *a += x);
    }
    let scale = 1.0 / count as f64;
    acc.iter_mut().for_each(|a| *a *= scale);
    acc
}

/// Periodic cross-correlation normalized by the reference energy:
/// `c[k] = Σ rx[n]·conj(ref[(n-k) mod N]) / Σ|ref|²`.
pub fn periodic_xcorr(rx: &ComplexSequence, reference: &ComplexSequence) -> Result<ComplexSequence, CorrelatorError> {
    let processor = CirProcessor::new(reference, WindowSpec::Rectangular)?;
    if rx.len() != reference.len() {
        return Err(CorrelatorError::LengthMismatch {
            expected: reference.len(),
            actual: rx.len(),
        });
    }
    Ok(ComplexSequence::from_parts(
        processor.correlate(rx.samples(), None),
        rx.sample_rate(),
    ))
}

/// Per-bin correction obtained from a back-to-back measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationProfile {
    inverse_response: Vec<Complex64>,
    reference_loss_db: f64,
}

impl CalibrationProfile {
    pub fn new(inverse_response: Vec<Complex64>, reference_loss_db: f64) -> Result<Self, CorrelatorError> {
        if let Some(bin) = inverse_response
            .iter()
            .position(|c| !(c.re.is_finite() && c.im.is_finite()) || c.norm() == 0.0)
        {
            return Err(CorrelatorError::DegenerateBin {
                bin,
                level_db: f64::NAN,
                floor_db: f64::NAN,
            });
        }
        Ok(Self {
            inverse_response,
            reference_loss_db,
        })
    }

    pub fn inverse_response(&self) -> &[Complex64] {
        &self.inverse_response
    }

    pub fn reference_loss_db(&self) -> f64 {
        self.reference_loss_db
    }

    pub fn len(&self) -> usize {
        self.inverse_response.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inverse_response.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationOptions {
    /// Bins weaker than the median by more than this are rejected.
    pub floor_db: f64,
    /// Half-width of a circular moving average over the correction; 0 = off.
    pub smoothing_halfwidth: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            floor_db: DEFAULT_CALIBRATION_FLOOR_DB,
            smoothing_halfwidth: 0,
        }
    }
}

/// Derives the system correction from a capture taken through a known flat
/// attenuation `known_loss_db`.
pub fn calibrate_b2b(
    reference_capture: &Capture,
    reference: &ComplexSequence,
    known_loss_db: f64,
    options: CalibrationOptions,
) -> Result<CalibrationProfile, CorrelatorError> {
    let len = reference.len();
    if reference_capture.period_len() != len {
        return Err(CorrelatorError::LengthMismatch {
            expected: len,
            actual: reference_capture.period_len(),
        });
    }
    let mut measured = average_segments(reference_capture.samples.samples(), len);
    fft::forward(&mut measured);
    let mut ref_spec = reference.samples().to_vec();
    fft::forward(&mut ref_spec);
    for (m, r) in measured.iter_mut().zip(&ref_spec) {
        *m = if r.norm() > 0.0 {
            *m / r
        } else {
            Complex64::new(0.0, 0.0)
        };
    }

    let mut mags: Vec<f64> = measured.iter().map(|m| m.norm()).collect();
    let mid = mags.len() / 2;
    let median = *mags.select_nth_unstable_by(mid, f64::total_cmp).1;
    let threshold = median * crate::db_to_amplitude(-options.floor_db);
    if let Some(bin) = measured.iter().position(|m| !(m.norm() >= threshold && m.norm() > 0.0)) {
        return Err(CorrelatorError::DegenerateBin {
            bin,
            level_db: crate::amplitude_db(measured[bin].norm() / median),
            floor_db: options.floor_db,
        });
    }

    let target = crate::db_to_amplitude(-known_loss_db);
    let mut inverse: Vec<Complex64> = measured.iter().map(|m| target / m).collect();
    if options.smoothing_halfwidth > 0 {
        inverse = circular_moving_average(&inverse, options.smoothing_halfwidth);
    }
    CalibrationProfile::new(inverse, known_loss_db)
}

fn circular_moving_average(values: &[Complex64], halfwidth: usize) -> Vec<Complex64> {
    let len = values.len();
    let span = (2 * halfwidth + 1).min(len);
    let half = span / 2;
    (0..len)
        .map(|i| {
            let sum: Complex64 = (0..span).map(|j| values[(i + len + j - half) % len]).sum();
            sum / span as f64
        })
        .collect()
}

/// Estimated channel impulse response.
#[derive(Debug, Clone, PartialEq)]
pub struct CirEstimate {
    taps: Vec<Complex64>,
    bin_spacing_s: f64,
    window: WindowSpec,
    pub metadata: BTreeMap<String, String>,
}

impl CirEstimate {
    pub fn new(taps: Vec<Complex64>, bin_spacing_s: f64, window: WindowSpec) -> Self {
        Self {
            taps,
            bin_spacing_s,
            window,
            metadata: BTreeMap::new(),
        }
    }

    pub fn taps(&self) -> &[Complex64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// Delay resolution, `1/B`.
    pub fn bin_spacing_s(&self) -> f64 {
        self.bin_spacing_s
    }

    pub fn window(&self) -> WindowSpec {
        self.window
    }

    pub fn delay_of(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_spacing_s
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.taps.iter().map(|t| t.norm()).collect()
    }

    /// Index and magnitude of the strongest tap.
    pub fn peak(&self) -> (usize, f64) {
        self.taps
            .iter()
            .map(|t| t.norm())
            .enumerate()
            .fold((0, f64::MIN), |best, (i, m)| if m > best.1 { (i, m) } else { best })
    }

    /// Default PSR guard interval for this CIR's window.
    pub fn default_exclusion(&self) -> usize {
        self.window.mainlobe_halfwidth(self.taps.len())
    }

    /// CSV with columns `delay_s,magnitude_db,phase_rad`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "delay_s,magnitude_db,phase_rad")?;
        for (i, t) in self.taps.iter().enumerate() {
            writeln!(out, "{},{},{}", self.delay_of(i), crate::amplitude_db(t.norm()), t.arg())?;
        }
        Ok(())
    }
}

/// Precomputed correlation against one reference sequence and window.
///
/// Holds `W[b]·conj(R[b]) / E` per bin, with the window scaled to unit mean so
/// a unity channel keeps a peak of exactly one.
#[derive(Debug, Clone)]
pub struct CirProcessor {
    kernel: Vec<Complex64>,
    window: WindowSpec,
    sample_rate: f64,
}

impl CirProcessor {
    pub fn new(reference: &ComplexSequence, window: WindowSpec) -> Result<Self, CorrelatorError> {
        if !window.is_valid() {
            return Err(CorrelatorError::InvalidWindow(window));
        }
        let energy = reference.energy();
        if energy == 0.0 {
            return Err(CorrelatorError::ZeroReference);
        }
        let len = reference.len();
        let mut kernel = reference.samples().to_vec();
        fft::forward(&mut kernel);
        kernel.iter_mut().for_each(|r| *r = r.conj() / energy);
        if window != WindowSpec::Rectangular {
            let coeffs = window.coefficients(len);
            let mean = coeffs.iter().sum::<f64>() / len as f64;
            for (i, w) in coeffs.iter().enumerate() {
                kernel[fft::centered_to_bin(i, len)] *= w / mean;
            }
        }
        Ok(Self {
            kernel,
            window,
            sample_rate: reference.sample_rate(),
        })
    }

    pub fn len(&self) -> usize {
        self.kernel.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernel.is_empty()
    }

    pub fn window(&self) -> WindowSpec {
        self.window
    }

    /// Correlates one (already averaged) period.
    pub(crate) fn correlate(&self, period: &[Complex64], cal: Option<&CalibrationProfile>) -> Vec<Complex64> {
        let mut spec = period.to_vec();
        fft::forward(&mut spec);
        spec.iter_mut().zip(&self.kernel).for_each(|(x, k)| *x *= k);
        if let Some(cal) = cal {
            spec.iter_mut()
                .zip(&cal.inverse_response)
                .for_each(|(x, c)| *x *= c);
        }
        fft::inverse(&mut spec);
        spec
    }

    /// Averages the periods of `samples` and correlates the result.
    pub fn process(
        &self,
        samples: &[Complex64],
        cal: Option<&CalibrationProfile>,
    ) -> Result<CirEstimate, CorrelatorError> {
        let len = self.kernel.len();
        if samples.is_empty() || samples.len() % len != 0 {
            return Err(CorrelatorError::LengthMismatch {
                expected: len * (samples.len() / len).max(1),
                actual: samples.len(),
            });
        }
        if let Some(cal) = cal {
            if cal.len() != len {
                return Err(CorrelatorError::LengthMismatch {
                    expected: len,
                    actual: cal.len(),
                });
            }
        }
        let avg = average_segments(samples, len);
        Ok(CirEstimate::new(
            self.correlate(&avg, cal),
            1.0 / self.sample_rate,
            self.window,
        ))
    }
}

/// Computes the CIR of a capture: average, calibrate, window, correlate.
pub fn compute_cir(
    capture: &Capture,
    reference: &ComplexSequence,
    cal: Option<&CalibrationProfile>,
    window: WindowSpec,
) -> Result<CirEstimate, CorrelatorError> {
    if capture.period_len() != reference.len() {
        return Err(CorrelatorError::LengthMismatch {
            expected: reference.len(),
            actual: capture.period_len(),
        });
    }
    let mut cir = CirProcessor::new(reference, window)?.process(capture.samples.samples(), cal)?;
    cir.metadata = capture.metadata.clone();
    cir.metadata
        .insert("periods".into(), capture.periods.to_string());
    cir.metadata
        .insert("calibrated".into(), cal.is_some().to_string());
    Ok(cir)
}
