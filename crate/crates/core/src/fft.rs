//! Thin wrapper around `rustfft` with a per-thread plan cache.

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unnormalized forward transform, in place.
pub(crate) fn forward(data: &mut [Complex64]) {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(data.len()).process(data));
}

/// Inverse transform scaled by `1/len`, in place.
pub(crate) fn inverse(data: &mut [Complex64]) {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(data.len()).process(data));
    let scale = 1.0 / data.len() as f64;
    data.iter_mut().for_each(|x| *x *= scale);
}

/// Maps a band-centred index (0 = lowest frequency) to its DFT bin.
#[inline]
pub(crate) fn centered_to_bin(index: usize, len: usize) -> usize {
    (index + len - len / 2) % len
}
