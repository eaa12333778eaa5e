//! Parametrization advice for maximizing dynamic range at the shortest
//! measurement distance.
//!
//! Three levers are considered, in this order: the time-bandwidth product of
//! the sounding signal, transmit power (while the receiver stays below
//! saturation at the shortest distance), and an input gain block when the
//! received SNR there is below what the receiver achieves with that block.
//! Bandwidth is treated as fixed; only `N` and `K` are varied.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{processing_gain, psr_bound};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdviceError {
    #[error("target dynamic range out of reach by {shortfall_db:.2} dB")]
    InfeasibleTarget { shortfall_db: f64 },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

/// Situation at the shortest measurement distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdvisorScenario {
    /// Path loss at the shortest distance `d_min`, dB.
    pub min_path_loss_db: f64,
    pub ptx_dbm: f64,
    pub ptx_max_dbm: f64,
    /// Maximum linear receiver input level, dBm.
    pub s_max_dbm: f64,
    /// Achievable SNR without the gain block, dB.
    pub snr_a_db: f64,
    /// Achievable SNR with the gain block inserted, dB.
    #[serde(default)]
    pub snr_a_gain_block_db: Option<f64>,
    /// Gain of the block; it lowers the maximum input level accordingly.
    /// When absent the block is assumed to let the receiver reach full scale.
    #[serde(default)]
    pub gain_block_gain_db: Option<f64>,
    pub length: usize,
    pub periods: usize,
    #[serde(default)]
    pub target_dr_db: Option<f64>,
    #[serde(default)]
    pub max_length: Option<usize>,
    #[serde(default)]
    pub max_periods: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum Recommendation {
    IncreaseTimeBandwidth {
        length_from: usize,
        length_to: usize,
        periods_from: usize,
        periods_to: usize,
        gain_db: f64,
    },
    IncreaseTransmitPower { by_db: f64 },
    ReduceTransmitPower { by_db: f64 },
    UseGainBlock { snr_gain_db: f64 },
}

impl fmt::Display for Recommendation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Recommendation::IncreaseTimeBandwidth {
                length_from,
                length_to,
                periods_from,
                periods_to,
                gain_db,
            } => write!(
                f,
                "raise time-bandwidth product: N {length_from} -> {length_to}, K {periods_from} -> {periods_to} (+{gain_db:.2} dB processing gain)"
            ),
            Recommendation::IncreaseTransmitPower { by_db } => {
                write!(f, "raise transmit power by {by_db:.2} dB (receiver stays below saturation)")
            }
            Recommendation::ReduceTransmitPower { by_db } => {
                write!(f, "reduce transmit power by {by_db:.2} dB: receiver saturates at the shortest distance")
            }
            Recommendation::UseGainBlock { snr_gain_db } => {
                write!(f, "insert the input gain block (+{snr_gain_db:.2} dB received SNR)")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Advice {
    pub recommendations: Vec<Recommendation>,
    /// Received SNR at the shortest distance as configured.
    pub snr_r_db: f64,
    pub current_dr_db: f64,
    /// Dynamic-range bound after applying every recommendation.
    pub advised_dr_db: f64,
}

impl AdvisorScenario {
    fn validate(&self) -> Result<(), AdviceError> {
        let bad = |m: &str| Err(AdviceError::InvalidScenario(m.to_owned()));
        if self.length == 0 || self.periods == 0 {
            return bad("length and periods must be at least 1");
        }
        if self.ptx_dbm > self.ptx_max_dbm {
            return bad("transmit power above its maximum");
        }
        if self.max_length.is_some_and(|m| m < self.length) || self.max_periods.is_some_and(|m| m < self.periods) {
            return bad("current N or K above the configured maximum");
        }
        let values = [self.min_path_loss_db, self.ptx_dbm, self.ptx_max_dbm, self.s_max_dbm, self.snr_a_db];
        if values.iter().any(|v| !v.is_finite()) {
            return bad("levels must be finite");
        }
        Ok(())
    }
}

/// Evaluates the three parametrization rules for `scenario`.
pub fn advise(scenario: &AdvisorScenario) -> Result<Advice, AdviceError> {
    scenario.validate()?;
    let s = scenario;
    let received = s.ptx_dbm - s.min_path_loss_db;
    let snr_r = s.snr_a_db - (s.s_max_dbm - received);
    let g_proc = processing_gain(s.length, s.periods).g_proc_db;
    let current_dr = psr_bound(snr_r.min(s.snr_a_db), g_proc);

    let mut power_step = None;
    let mut snr_best = snr_r;
    if received > s.s_max_dbm {
        let by_db = received - s.s_max_dbm;
        power_step = Some(Recommendation::ReduceTransmitPower { by_db });
        snr_best = s.snr_a_db;
    } else {
        let headroom = (s.ptx_max_dbm - s.ptx_dbm).min(s.s_max_dbm - received);
        if headroom > 0.0 {
            power_step = Some(Recommendation::IncreaseTransmitPower { by_db: headroom });
            snr_best = snr_r + headroom;
        }
    }

    let mut gain_block_step = None;
    if let Some(snr_a_g) = s.snr_a_gain_block_db {
        let snr_with_block = match s.gain_block_gain_db {
            Some(g) => {
                let s_max_g = s.s_max_dbm - g;
                let level = (s.ptx_max_dbm - s.min_path_loss_db).min(s_max_g);
                snr_a_g - (s_max_g - level)
            }
            None => snr_a_g,
        };
        if snr_with_block > snr_best {
            gain_block_step = Some(Recommendation::UseGainBlock {
                snr_gain_db: snr_with_block - snr_best,
            });
            snr_best = snr_with_block;
        }
    }

    let dr_after_power = psr_bound(snr_best, g_proc);
    let mut tbp_step = None;
    let mut advised_dr = dr_after_power;
    if let Some(target) = s.target_dr_db {
        let shortfall = target - dr_after_power;
        if shortfall > 0.0 {
            let (length_to, periods_to) = scale_time_bandwidth(s, crate::db_to_power(shortfall))?;
            let gain = processing_gain(length_to, periods_to).g_proc_db - g_proc;
            advised_dr = dr_after_power + gain;
            tbp_step = Some(Recommendation::IncreaseTimeBandwidth {
                length_from: s.length,
                length_to,
                periods_from: s.periods,
                periods_to,
                gain_db: gain,
            });
        }
    }

    Ok(Advice {
        recommendations: [tbp_step, power_step, gain_block_step].into_iter().flatten().collect(),
        snr_r_db: snr_r,
        current_dr_db: current_dr,
        advised_dr_db: advised_dr,
    })
}

/// Smallest growth of `K` (then `N`, once `K` is capped) reaching `factor`.
fn scale_time_bandwidth(s: &AdvisorScenario, factor: f64) -> Result<(usize, usize), AdviceError> {
    let need = s.periods as f64 * s.length as f64 * factor;
    let k_needed = (need / s.length as f64 - 1e-9).ceil() as usize;
    let k_cap = s.max_periods.unwrap_or(usize::MAX);
    if k_needed <= k_cap {
        return Ok((s.length, k_needed.max(s.periods)));
    }
    let n_needed = (need / k_cap as f64 - 1e-9).ceil() as usize;
    let n_cap = s.max_length.unwrap_or(usize::MAX);
    if n_needed <= n_cap {
        return Ok((n_needed, k_cap));
    }
    let reachable = k_cap as f64 * n_cap as f64 / (s.periods as f64 * s.length as f64);
    Err(AdviceError::InfeasibleTarget {
        shortfall_db: crate::power_db(factor) - crate::power_db(reachable),
    })
}
