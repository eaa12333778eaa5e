//! Pulse-forming windows.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::fft;

/// Window applied across the measured band before the inverse transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WindowSpec {
    Rectangular,
    /// Dolph-Chebyshev window with equiripple sidelobes at the given level.
    Chebyshev { sidelobe_db: f64 },
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec::Chebyshev { sidelobe_db: 100.0 }
    }
}

impl WindowSpec {
    pub fn is_valid(&self) -> bool {
        match *self {
            WindowSpec::Rectangular => true,
            WindowSpec::Chebyshev { sidelobe_db } => sidelobe_db.is_finite() && sidelobe_db > 0.0,
        }
    }

    /// Window coefficients of the given length, unit peak.
    pub fn coefficients(&self, len: usize) -> Vec<f64> {
        match *self {
            WindowSpec::Rectangular => vec![1.0; len],
            WindowSpec::Chebyshev { sidelobe_db } => chebyshev_window(len, sidelobe_db),
        }
    }

    /// Half-width in bins of the mainlobe of the pulse this window forms when
    /// applied across `len` frequency bins. Bins within it belong to the
    /// instrument response rather than to the error floor.
    pub fn mainlobe_halfwidth(&self, len: usize) -> usize {
        match *self {
            WindowSpec::Rectangular => 0,
            WindowSpec::Chebyshev { sidelobe_db } => {
                if len < 3 {
                    return 0;
                }
                let order = (len - 1) as f64;
                let beta = (db_ratio(sidelobe_db).acosh() / order).cosh();
                let null = (PI / (2.0 * order)).cos() / beta;
                let k0 = len as f64 / PI * null.acos();
                k0.ceil() as usize
            }
        }
    }
}

fn db_ratio(db: f64) -> f64 {
    10f64.powf(db.abs() / 20.0)
}

/// Dolph-Chebyshev window of `len` points, normalized to unit peak.
///
/// Built from the Chebyshev polynomial sampled on the DFT grid and
/// transformed back; even lengths get a half-sample phase shift so the
/// window stays symmetric.
pub fn chebyshev_window(len: usize, sidelobe_db: f64) -> Vec<f64> {
    match len {
        0 => return Vec::new(),
        1 => return vec![1.0],
        _ => {}
    }
    let order = (len - 1) as f64;
    let m = len as f64;
    let beta = (db_ratio(sidelobe_db).acosh() / order).cosh();
    let odd = len % 2 == 1;

    let mut p: Vec<Complex64> = (0..len)
        .map(|k| {
            let x = beta * (PI * k as f64 / m).cos();
            let t = if x > 1.0 {
                (order * x.acosh()).cosh()
            } else if x < -1.0 {
                let sign = if odd { 1.0 } else { -1.0 };
                sign * (order * (-x).acosh()).cosh()
            } else {
                (order * x.acos()).cos()
            };
            if odd {
                Complex64::new(t, 0.0)
            } else {
                t * Complex64::from_polar(1.0, PI * k as f64 / m)
            }
        })
        .collect();
    fft::forward(&mut p);
    let re: Vec<f64> = p.iter().map(|c| c.re).collect();

    let mut w = Vec::with_capacity(len);
    if odd {
        let half = len.div_ceil(2);
        w.extend(re[1..half].iter().rev());
        w.extend_from_slice(&re[..half]);
    } else {
        let half = len / 2 + 1;
        w.extend(re[1..half].iter().rev());
        w.extend_from_slice(&re[1..half]);
    }
    let peak = w.iter().cloned().fold(f64::MIN, f64::max);
    w.iter_mut().for_each(|v| *v /= peak);
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_lengths() {
        assert_eq!(chebyshev_window(1, 100.0), vec![1.0]);
        assert_eq!(chebyshev_window(2, 100.0), vec![1.0, 1.0]);
    }

    #[test]
    fn symmetric_with_unit_peak() {
        for len in [3, 4, 7, 16, 33, 128, 1001] {
            let w = chebyshev_window(len, 100.0);
            assert_eq!(w.len(), len);
            for i in 0..len {
                assert!((w[i] - w[len - 1 - i]).abs() < 1e-12, "len {len} i {i}");
            }
            let peak = w.iter().cloned().fold(f64::MIN, f64::max);
            assert!((peak - 1.0).abs() < 1e-15);
            assert!(w.iter().all(|v| *v > 0.0));
        }
    }

    #[test]
    fn matches_reference_values() {
        // scipy.signal.windows.chebwin
        let cases: [(usize, f64, &[f64]); 2] = [
            (5, 50.0, &[0.20549421633071246, 0.70104634453696, 1.0, 0.70104634453696, 0.20549421633071246]),
            (6, 60.0, &[0.13265103435564735, 0.5477085429608687, 1.0, 1.0, 0.5477085429608687, 0.13265103435564735]),
        ];
        for (len, db, expected) in cases {
            let w = chebyshev_window(len, db);
            for (a, b) in w.iter().zip(expected) {
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn mainlobe_halfwidth_for_100_db() {
        let spec = WindowSpec::Chebyshev { sidelobe_db: 100.0 };
        assert_eq!(spec.mainlobe_halfwidth(100_000), 4);
        assert_eq!(WindowSpec::Rectangular.mainlobe_halfwidth(100_000), 0);
    }

    #[test]
    fn sidelobes_of_length_128_stay_below_design_level() {
        let len = 128;
        let w = chebyshev_window(len, 100.0);
        let order = (len - 1) as f64;
        let beta = (db_ratio(100.0).acosh() / order).cosh();
        let first_null = 2.0 * ((PI / (2.0 * order)).cos() / beta).acos();
        let dtft = |omega: f64| -> f64 {
            w.iter()
                .enumerate()
                .map(|(n, &v)| Complex64::from_polar(v, -omega * n as f64))
                .sum::<Complex64>()
                .norm()
        };
        let dc = dtft(0.0);
        let grid = 8192;
        let worst = (0..=grid)
            .map(|i| first_null + (PI - first_null) * i as f64 / grid as f64)
            .map(|omega| 20.0 * (dtft(omega) / dc).log10())
            .fold(f64::MIN, f64::max);
        assert!(worst <= -99.5, "{worst}");
        assert!(worst >= -100.5, "{worst}");
    }
}
