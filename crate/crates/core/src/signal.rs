//! The complex baseband sample block shared by every stage.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SignalError {
    #[error("sequence must contain at least one sample")]
    Empty,
    #[error("sample {index} is not finite")]
    NonFinite { index: usize },
    #[error("sample rate must be positive and finite, got {0}")]
    InvalidSampleRate(f64),
}

/// A nonempty block of finite complex baseband samples and its sample rate.
///
/// Under the one-sample-per-chip convention used throughout the crate the
/// sample rate equals the signal bandwidth `B`, so one sequence period lasts
/// `len / sample_rate` seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSequence {
    samples: Vec<Complex64>,
    sample_rate: f64,
}

impl ComplexSequence {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64) -> Result<Self, SignalError> {
        if samples.is_empty() {
            return Err(SignalError::Empty);
        }
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(SignalError::InvalidSampleRate(sample_rate));
        }
        if let Some(index) = samples
            .iter()
            .position(|s| !(s.re.is_finite() && s.im.is_finite()))
        {
            return Err(SignalError::NonFinite { index });
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    /// Skips validation. Callers guarantee the invariants hold, which is the
    /// case for every internal transformation of an already valid sequence
    /// with finite coefficients.
    pub(crate) fn from_parts(samples: Vec<Complex64>, sample_rate: f64) -> Self {
        debug_assert!(!samples.is_empty());
        Self {
            samples,
            sample_rate,
        }
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Always false; kept for API symmetry with slices.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    /// Duration of the whole block in seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// Sum of squared magnitudes.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }

    pub fn mean_power(&self) -> f64 {
        self.energy() / self.samples.len() as f64
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_parts(
            self.samples.iter().map(|s| s * factor).collect(),
            self.sample_rate,
        )
    }

    /// Circular shift so that `out[n] = self[(n - shift) mod len]`.
    pub fn circular_shift(&self, shift: usize) -> Self {
        let mut samples = self.samples.clone();
        let len = samples.len();
        samples.rotate_right(shift % len);
        Self::from_parts(samples, self.sample_rate)
    }

    /// Concatenates `count` copies of the sequence.
    pub fn repeat(&self, count: usize) -> Self {
        assert!(count >= 1, "repeat count must be at least one");
        Self::from_parts(self.samples.repeat(count), self.sample_rate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_invalid_input() {
        assert_eq!(
            ComplexSequence::new(vec![], 1.0).unwrap_err(),
            SignalError::Empty
        );
        assert_eq!(
            ComplexSequence::new(vec![Complex64::new(f64::NAN, 0.0)], 1.0).unwrap_err(),
            SignalError::NonFinite { index: 0 }
        );
        assert!(matches!(
            ComplexSequence::new(vec![Complex64::new(1.0, 0.0)], 0.0),
            Err(SignalError::InvalidSampleRate(_))
        ));
    }

    #[test]
    fn shift_moves_samples_right() {
        let seq = ComplexSequence::new(
            (0..5).map(|i| Complex64::new(i as f64, 0.0)).collect(),
            1.0,
        )
        .unwrap();
        let shifted = seq.circular_shift(2);
        let re: Vec<f64> = shifted.samples().iter().map(|s| s.re).collect();
        assert_eq!(re, vec![3.0, 4.0, 0.0, 1.0, 2.0]);
    }
}
