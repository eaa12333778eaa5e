//! Figures of merit for correlative channel sounders.
//!
//! * Peak-to-sidelobe ratio: correlation peak magnitude over the 0.99-quantile
//!   of all other correlation magnitudes. For a single-tap channel it is the
//!   dynamic range of the measured CIR.
//! * Instantaneous dynamic range: strongest multipath magnitude over the
//!   0.99-quantile of the error magnitudes in one CIR.
//! * Processing gain `G_proc = G_corr + G_avg = 10·log10(N) + 10·log10(K)`.
//! * Achievable dynamic range `DR_A = SNR_A + G_proc - 9.7 dB`, and the path
//!   loss bounds `PL_min,0 = P_tx,max - S_max`, `PL_max = PL_min + DR_A`.

mod advise;
mod montecarlo;

use serde::Serialize;
use thiserror::Error;

use crate::correlator::CirEstimate;
use crate::{amplitude_db, power_db};

pub use advise::{advise, Advice, AdviceError, AdvisorScenario, Recommendation};
pub use montecarlo::{
    derive_seed, monte_carlo_psr, MonteCarloError, MonteCarloSpec, PsrRow, TrialRunner,
};

/// Empirical offset between `SNR_R + G_proc` and the 0.01-quantile PSR of a
/// Chebyshev-windowed FZC sounder in the noise-limited regime.
pub const PSR_BOUND_OFFSET_DB: f64 = 9.7;

/// Quantile of the error magnitudes used as the CIR noise floor.
pub const FLOOR_QUANTILE: f64 = 0.99;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("quantile of an empty list")]
    EmptyInput,
    #[error("quantile level {0} outside [0, 1]")]
    InvalidQuantile(f64),
    #[error("CIR is identically zero")]
    DegenerateCir,
    #[error("CIR of {len} bins too short for an exclusion half-width of {halfwidth}")]
    TooShort { len: usize, halfwidth: usize },
    #[error("multipath bin {bin} outside CIR of {len} bins")]
    BinOutOfRange { bin: usize, len: usize },
    #[error("no multipath bins given")]
    NoMultipathBins,
    #[error("no error bins left after excluding multipath components")]
    NoErrorBins,
}

/// Linear-interpolation sample quantile (`h = (n-1)·q` on the sorted values).
pub fn quantile(values: &[f64], q: f64) -> Result<f64, MetricsError> {
    let mut scratch = values.to_vec();
    quantile_in_place(&mut scratch, q)
}

/// As [`quantile`], reordering `values` instead of copying them. Runs in
/// linear time.
pub fn quantile_in_place(values: &mut [f64], q: f64) -> Result<f64, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(MetricsError::InvalidQuantile(q));
    }
    let h = (values.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    let (_, &mut lower, upper_part) = values.select_nth_unstable_by(lo, f64::total_cmp);
    if frac == 0.0 || upper_part.is_empty() {
        return Ok(lower);
    }
    let upper = upper_part.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(lower + frac * (upper - lower))
}

/// Result of a peak-to-sidelobe evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsrReport {
    pub psr_db: f64,
    pub peak_index: usize,
    pub peak_magnitude_db: f64,
    /// 0.99-quantile of the magnitudes outside the exclusion interval.
    pub floor_q99_db: f64,
    pub excluded_halfwidth: usize,
}

/// PSR of a CIR, excluding `excluded_halfwidth` bins on either side of the
/// peak (circularly) from the floor statistics.
pub fn psr(cir: &CirEstimate, excluded_halfwidth: usize) -> Result<PsrReport, MetricsError> {
    psr_of_magnitudes(&cir.magnitudes(), excluded_halfwidth)
}

/// [`psr`] on raw magnitudes.
pub fn psr_of_magnitudes(magnitudes: &[f64], excluded_halfwidth: usize) -> Result<PsrReport, MetricsError> {
    let len = magnitudes.len();
    if len <= 2 * excluded_halfwidth + 1 {
        return Err(MetricsError::TooShort {
            len,
            halfwidth: excluded_halfwidth,
        });
    }
    let (peak_index, peak) = magnitudes
        .iter()
        .cloned()
        .enumerate()
        .fold((0, f64::MIN), |best, (i, m)| if m > best.1 { (i, m) } else { best });
    if peak <= 0.0 {
        return Err(MetricsError::DegenerateCir);
    }
    let mut rest = Vec::with_capacity(len - 2 * excluded_halfwidth - 1);
    let start = peak_index + excluded_halfwidth + 1;
    for offset in 0..len - 2 * excluded_halfwidth - 1 {
        rest.push(magnitudes[(start + offset) % len]);
    }
    let floor = quantile_in_place(&mut rest, FLOOR_QUANTILE)?;
    let peak_db = amplitude_db(peak);
    let floor_db = amplitude_db(floor);
    Ok(PsrReport {
        psr_db: peak_db - floor_db,
        peak_index,
        peak_magnitude_db: peak_db,
        floor_q99_db: floor_db,
        excluded_halfwidth,
    })
}

/// Instantaneous dynamic range with caller-supplied multipath bins.
///
/// The strongest magnitude among `multipath_bins` is compared with the
/// 0.99-quantile of all bins farther than `excluded_halfwidth` from every
/// multipath bin.
pub fn idr(cir: &CirEstimate, multipath_bins: &[usize], excluded_halfwidth: usize) -> Result<f64, MetricsError> {
    let mags = cir.magnitudes();
    let len = mags.len();
    if multipath_bins.is_empty() {
        return Err(MetricsError::NoMultipathBins);
    }
    if let Some(&bin) = multipath_bins.iter().find(|&&b| b >= len) {
        return Err(MetricsError::BinOutOfRange { bin, len });
    }
    let mut excluded = vec![false; len];
    for &bin in multipath_bins {
        for off in 0..=excluded_halfwidth.min(len) {
            excluded[(bin + off) % len] = true;
            excluded[(bin + len - off % len) % len] = true;
        }
    }
    let strongest = multipath_bins.iter().map(|&b| mags[b]).fold(0.0, f64::max);
    if mags.iter().all(|&m| m == 0.0) {
        return Err(MetricsError::DegenerateCir);
    }
    let mut errors: Vec<f64> = mags
        .iter()
        .zip(&excluded)
        .filter(|(_, &ex)| !ex)
        .map(|(&m, _)| m)
        .collect();
    if errors.is_empty() {
        return Err(MetricsError::NoErrorBins);
    }
    let floor = quantile_in_place(&mut errors, FLOOR_QUANTILE)?;
    Ok(amplitude_db(strongest / floor))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProcessingGain {
    pub g_corr_db: f64,
    pub g_avg_db: f64,
    pub g_proc_db: f64,
}

/// Correlation gain of an `N`-chip period plus averaging gain of `K` periods.
pub fn processing_gain(length: usize, periods: usize) -> ProcessingGain {
    let g_corr_db = power_db(length as f64);
    let g_avg_db = power_db(periods as f64);
    ProcessingGain {
        g_corr_db,
        g_avg_db,
        g_proc_db: g_corr_db + g_avg_db,
    }
}

/// Upper bound on the PSR (and hence the instantaneous dynamic range).
pub fn psr_bound(snr_r_db: f64, g_proc_db: f64) -> f64 {
    snr_r_db + g_proc_db - PSR_BOUND_OFFSET_DB
}

/// Maximum measurable path loss from the minimum one and a dynamic range.
pub fn max_path_loss(pl_min_db: f64, dynamic_range_db: f64) -> f64 {
    pl_min_db + dynamic_range_db
}

/// Closed-form path-loss budget of one sounder parametrization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkBudget {
    pub g_corr_db: f64,
    pub g_avg_db: f64,
    pub g_proc_db: f64,
    pub dr_a_db: f64,
    pub pl_min_db: f64,
    pub pl_max_db: f64,
    pub pl_min_0_db: Option<f64>,
    pub dr_a_0_db: Option<f64>,
    pub pl_max_0_db: Option<f64>,
}

impl LinkBudget {
    /// Records the best dynamic range over all parametrizations, filling in
    /// `PL_max,0`.
    pub fn with_max_dynamic_range(mut self, dr_a_0_db: f64) -> Self {
        self.dr_a_0_db = Some(dr_a_0_db);
        self.pl_max_0_db = self.pl_min_0_db.map(|pl| max_path_loss(pl, dr_a_0_db));
        self
    }
}

/// Budget with the transmitter at full power, so `PL_min = PL_min,0`.
pub fn link_budget(ptx_max_dbm: f64, s_max_dbm: f64, snr_a_db: f64, length: usize, periods: usize) -> LinkBudget {
    let gain = processing_gain(length, periods);
    let pl_min = ptx_max_dbm - s_max_dbm;
    let dr_a = psr_bound(snr_a_db, gain.g_proc_db);
    LinkBudget {
        g_corr_db: gain.g_corr_db,
        g_avg_db: gain.g_avg_db,
        g_proc_db: gain.g_proc_db,
        dr_a_db: dr_a,
        pl_min_db: pl_min,
        pl_max_db: max_path_loss(pl_min, dr_a),
        pl_min_0_db: Some(pl_min),
        dr_a_0_db: None,
        pl_max_0_db: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlator::WindowSpec;
    use num_complex::Complex64;

    fn cir(mags: &[f64]) -> CirEstimate {
        CirEstimate::new(
            mags.iter().map(|&m| Complex64::new(m, 0.0)).collect(),
            1.0,
            WindowSpec::Rectangular,
        )
    }

    #[test]
    fn quantile_examples() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(quantile(&v, 0.0).unwrap(), 1.0);
        assert_eq!(quantile(&v, 1.0).unwrap(), 100.0);
        assert!((quantile(&v, 0.99).unwrap() - 99.01).abs() < 1e-12);
        assert_eq!(quantile(&[], 0.5), Err(MetricsError::EmptyInput));
        assert_eq!(quantile(&[1.0], 1.5), Err(MetricsError::InvalidQuantile(1.5)));
        assert_eq!(quantile(&[7.0], 0.3).unwrap(), 7.0);
    }

    #[test]
    fn psr_of_flat_floor() {
        let mut mags = vec![0.001; 1000];
        mags[17] = 1.0;
        let r = psr(&cir(&mags), 0).unwrap();
        assert_eq!(r.peak_index, 17);
        assert!((r.psr_db - 60.0).abs() < 1e-9);
        assert!((r.psr_db - (r.peak_magnitude_db - r.floor_q99_db)).abs() < 1e-12);
    }

    #[test]
    fn psr_exclusion_wraps_around() {
        let mut mags = vec![0.001; 100];
        mags[0] = 1.0;
        mags[1] = 0.5;
        mags[99] = 0.5;
        assert!(psr(&cir(&mags), 0).unwrap().psr_db < 10.0);
        assert!((psr(&cir(&mags), 1).unwrap().psr_db - 60.0).abs() < 1e-9);
    }

    #[test]
    fn psr_errors() {
        assert_eq!(psr(&cir(&[0.0; 10]), 0), Err(MetricsError::DegenerateCir));
        assert!(matches!(psr(&cir(&[1.0; 5]), 2), Err(MetricsError::TooShort { .. })));
    }

    #[test]
    fn idr_examples() {
        let mut mags = vec![0.001; 1000];
        mags[5] = 1.0;
        let single = cir(&mags);
        assert_eq!(idr(&single, &[5], 0).unwrap(), psr(&single, 0).unwrap().psr_db);

        mags[300] = 0.5;
        let two = cir(&mags);
        assert!((idr(&two, &[5, 300], 0).unwrap() - 60.0).abs() < 1e-9);
        assert_eq!(idr(&two, &[], 0), Err(MetricsError::NoMultipathBins));
        assert_eq!(
            idr(&two, &[1000], 0),
            Err(MetricsError::BinOutOfRange { bin: 1000, len: 1000 })
        );
    }

    #[test]
    fn processing_gain_examples() {
        let g = processing_gain(100_000, 1);
        assert!((g.g_corr_db - 50.0).abs() < 1e-12);
        assert_eq!(g.g_avg_db, 0.0);
        assert!((processing_gain(200_000, 10).g_proc_db - 63.0103).abs() < 1e-4);
        assert_eq!(processing_gain(1, 1).g_proc_db, 0.0);
    }

    #[test]
    fn bound_examples() {
        assert!((psr_bound(40.0, 50.0) - 80.3).abs() < 1e-12);
        assert!((psr_bound(45.0, processing_gain(100_000, 1).g_proc_db) - 85.3).abs() < 1e-9);
        assert!((psr_bound(34.0, 63.01) - 87.31).abs() < 1e-9);
    }

    #[test]
    fn link_budget_examples() {
        assert!((max_path_loss(60.0, 83.2) - 143.2).abs() < 1e-12);
        let b = link_budget(10.0, 0.0, 34.0, 200_000, 10);
        assert_eq!(b.pl_min_0_db, Some(10.0));
        assert!((b.dr_a_db - 87.31).abs() < 0.01);
        assert!((b.pl_max_db - (b.pl_min_db + b.dr_a_db)).abs() < 1e-12);
        assert!((b.g_proc_db - (b.g_corr_db + b.g_avg_db)).abs() < 1e-12);
        let b0 = b.with_max_dynamic_range(90.0);
        assert_eq!(b0.pl_max_0_db, Some(100.0));
    }
}
