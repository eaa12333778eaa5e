//! Simulation and analysis toolkit for digital correlative time-domain
//! channel sounders.
//!
//! The crate is organised along the signal path of a sounder:
//!
//! * [`fzc`] generates Frank-Zadoff-Chu sounding sequences and checks their
//!   intrinsic properties (constant envelope, perfect periodic
//!   autocorrelation, crest factor).
//! * [`frontend`] models the impaired digital receiver: channel, thermal and
//!   intrinsic noise, amplitude limiting and quantization.
//! * [`correlator`] turns received captures into calibrated, windowed
//!   channel impulse responses.
//! * [`metrics`] holds the figures of merit: peak-to-sidelobe ratio, dynamic
//!   range, processing gain, path-loss bounds, the Monte-Carlo PSR engine and
//!   the parametrization advisor.
//! * [`harness`] wires everything to scenario files, presets, IQ recordings
//!   and result tables.
//!
//! ```
//! use corrsounder::fzc::{generate_fzc, periodic_autocorrelation, FzcSpec};
//!
//! let seq = generate_fzc(&FzcSpec::new(100, 1)?, 2e9)?;
//! let acf = periodic_autocorrelation(&seq);
//! assert!((acf.samples()[0].norm() - 100.0).abs() < 1e-9);
//! assert!(acf.samples()[1..].iter().all(|r| r.norm() < 1e-9 * 100.0));
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod correlator;
mod fft;
pub mod frontend;
pub mod fzc;
pub mod harness;
pub mod metrics;
pub mod signal;

pub use num_complex::Complex64;
pub use signal::{ComplexSequence, SignalError};

/// Converts a power ratio to decibels.
#[inline]
pub fn power_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

/// Converts an amplitude ratio to decibels.
#[inline]
pub fn amplitude_db(ratio: f64) -> f64 {
    20.0 * ratio.log10()
}

/// Converts decibels to a linear power ratio.
#[inline]
pub fn db_to_power(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts decibels to a linear amplitude ratio.
#[inline]
pub fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}
