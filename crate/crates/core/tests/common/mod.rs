//! Independent reference implementations used as test oracles.

#![allow(dead_code)]

use corrsounder::Complex64;

/// `c[k] = Σ rx[n]·conj(ref[(n-k) mod N]) / Σ|ref|²` by direct summation.
pub fn direct_xcorr(rx: &[Complex64], reference: &[Complex64]) -> Vec<Complex64> {
    let n = reference.len();
    let energy: f64 = reference.iter().map(|r| r.norm_sqr()).sum();
    (0..n)
        .map(|k| (0..n).map(|i| rx[i] * reference[(i + n - k) % n].conj()).sum::<Complex64>() / energy)
        .collect()
}

/// Unnormalized periodic autocorrelation by direct summation.
pub fn direct_acf(s: &[Complex64]) -> Vec<Complex64> {
    let n = s.len();
    (0..n)
        .map(|k| (0..n).map(|i| s[i] * s[(i + n - k) % n].conj()).sum())
        .collect()
}

/// Sort, then interpolate between the order statistics around `(n-1)q`.
pub fn brute_quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// Ordinary least-squares slope of `y` over `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
