//! Frank-Zadoff-Chu sounding sequences.
//!
//! A sequence is fixed by its length `N` and a root `λ` coprime to `N`. The
//! samples are unit-magnitude complex exponentials with quadratic phase:
//!
//! ```text
//! ξ[n] = π λ n (n + 1) / N     (N odd)
//! ξ[n] = π λ n² / N            (N even)
//! s[n] = exp(j ξ[n])
//! ```
//!
//! The periodic autocorrelation of such a sequence vanishes at every
//! non-zero lag, which is what makes it attractive as a pulse-compression
//! waveform.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fft;
use crate::signal::{ComplexSequence, SignalError};

/// Oversampling used when reporting the analog crest factor.
pub const DEFAULT_CREST_OVERSAMPLING: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FzcError {
    #[error("root {root} outside 1..={max} for length {length}", max = length.saturating_sub(1))]
    InvalidRange { length: usize, root: usize },
    #[error("root {root} is not coprime to length {length} (gcd = {gcd})")]
    NotCoprime {
        length: usize,
        root: usize,
        gcd: usize,
    },
    #[error("oversampling factor must be at least 1")]
    InvalidOversampling,
    #[error("signal has zero mean power")]
    ZeroSignal,
    #[error(transparent)]
    Signal(#[from] SignalError),
}

/// Length and root of one FZC sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawFzcSpec", into = "RawFzcSpec")]
pub struct FzcSpec {
    length: usize,
    root: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFzcSpec {
    length: usize,
    root: usize,
}

impl TryFrom<RawFzcSpec> for FzcSpec {
    type Error = FzcError;

    fn try_from(raw: RawFzcSpec) -> Result<Self, Self::Error> {
        FzcSpec::new(raw.length, raw.root)
    }
}

impl From<FzcSpec> for RawFzcSpec {
    fn from(spec: FzcSpec) -> Self {
        RawFzcSpec {
            length: spec.length,
            root: spec.root,
        }
    }
}

impl FzcSpec {
    pub fn new(length: usize, root: usize) -> Result<Self, FzcError> {
        if root < 1 || root >= length {
            return Err(FzcError::InvalidRange { length, root });
        }
        let gcd = gcd(length, root);
        if gcd != 1 {
            return Err(FzcError::NotCoprime { length, root, gcd });
        }
        Ok(Self { length, root })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn root(&self) -> usize {
        self.root
    }

    /// Phase of sample `n` in radians, reduced to `[0, 2π)`.
    ///
    /// The quadratic term is reduced modulo `2N` in integer arithmetic first,
    /// so the phase stays exact to one rounding even for `n²` far beyond the
    /// mantissa of an `f64`.
    pub fn phase(&self, n: usize) -> f64 {
        let n = n as u128;
        let len = self.length as u128;
        let quad = if self.length % 2 == 1 { n * (n + 1) } else { n * n };
        let residue = (self.root as u128 * (quad % (2 * len))) % (2 * len);
        PI * residue as f64 / self.length as f64
    }
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Generates the `N` samples of the sequence described by `spec`.
pub fn generate_fzc(spec: &FzcSpec, sample_rate: f64) -> Result<ComplexSequence, FzcError> {
    let samples = (0..spec.length)
        .map(|n| Complex64::from_polar(1.0, spec.phase(n)))
        .collect();
    Ok(ComplexSequence::new(samples, sample_rate)?)
}

/// Periodic autocorrelation `R[k] = Σ s[n] conj(s[(n-k) mod N])` for every lag.
///
/// Computed through the power spectrum. `R[0]` is set to the directly summed
/// energy so it is exact.
pub fn periodic_autocorrelation(seq: &ComplexSequence) -> ComplexSequence {
    let mut spectrum = seq.samples().to_vec();
    fft::forward(&mut spectrum);
    spectrum.iter_mut().for_each(|x| *x = Complex64::new(x.norm_sqr(), 0.0));
    fft::inverse(&mut spectrum);
    spectrum[0] = Complex64::new(seq.energy(), 0.0);
    ComplexSequence::from_parts(spectrum, seq.sample_rate())
}

/// Band-limited interpolation of one period by zero-padding its spectrum.
///
/// For even lengths the Nyquist bin is split evenly between the positive and
/// negative halves so real signals stay real.
pub fn interpolate_periodic(
    seq: &ComplexSequence,
    oversample_factor: usize,
) -> Result<Vec<Complex64>, FzcError> {
    if oversample_factor == 0 {
        return Err(FzcError::InvalidOversampling);
    }
    let len = seq.len();
    if oversample_factor == 1 {
        return Ok(seq.samples().to_vec());
    }
    let mut spectrum = seq.samples().to_vec();
    fft::forward(&mut spectrum);

    let out_len = len * oversample_factor;
    let mut padded = vec![Complex64::new(0.0, 0.0); out_len];
    let positive = len.div_ceil(2);
    padded[..positive].copy_from_slice(&spectrum[..positive]);
    let negative = len / 2;
    let neg_start = len - negative;
    padded[out_len - negative..].copy_from_slice(&spectrum[neg_start..]);
    if len % 2 == 0 {
        let half = spectrum[len / 2] * 0.5;
        padded[len / 2] = half;
        padded[out_len - len / 2] = half;
    }
    fft::inverse(&mut padded);
    let gain = oversample_factor as f64;
    padded.iter_mut().for_each(|x| *x *= gain);
    Ok(padded)
}

/// Ratio of peak to mean envelope power of the band-limited periodic signal,
/// in dB.
pub fn crest_factor_db(seq: &ComplexSequence, oversample_factor: usize) -> Result<f64, FzcError> {
    let interp = interpolate_periodic(seq, oversample_factor)?;
    let (peak, sum) = interp
        .iter()
        .map(|x| x.norm_sqr())
        .fold((0.0f64, 0.0f64), |(p, s), v| (p.max(v), s + v));
    let mean = sum / interp.len() as f64;
    if mean == 0.0 {
        return Err(FzcError::ZeroSignal);
    }
    Ok(crate::power_db(peak / mean))
}
