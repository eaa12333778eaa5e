//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export returns a flat `Float64Array`; the layout is given on each
//! function. Errors surface as JavaScript exceptions carrying the message.

use corrsounder::frontend::{NormalizedLink, Quantizer, QuantizerKind};
use corrsounder::fzc::{crest_factor_db, generate_fzc, FzcSpec, DEFAULT_CREST_OVERSAMPLING};
use corrsounder::harness::{correlation_traces, TracesConfig};
use corrsounder::metrics::{link_budget, processing_gain, psr_bound, MonteCarloSpec, TrialRunner};
use corrsounder::frontend::ChannelModel;
use wasm_bindgen::prelude::*;

/// Longest sequence the demo accepts, to keep the page responsive.
pub const MAX_LENGTH: usize = 65_536;

fn check_length(length: usize) -> Result<(), String> {
    if length > MAX_LENGTH {
        Err(format!("length {length} above the demo limit of {MAX_LENGTH}"))
    } else {
        Ok(())
    }
}

/// `[quantized_db; N] ++ [awgn_db; N]`, both normalized and floored.
pub fn traces(length: usize, root: usize, bits: u32, awgn_db: f64, floor_db: f64, seed: u64) -> Result<Vec<f64>, String> {
    check_length(length)?;
    let spec = FzcSpec::new(length, root).map_err(|e| e.to_string())?;
    let cfg = TracesConfig { bits, awgn_db, floor_db };
    let table = correlation_traces(&spec, 1.0, &cfg, QuantizerKind::MidRise, seed).map_err(|e| e.to_string())?;
    let col = |name| -> Vec<f64> { table.column_f64(name).unwrap_or_default().into_iter().flatten().collect() };
    let mut out = col("quantized_db");
    out.extend(col("awgn_db"));
    out.push(crest_factor_db(&generate_fzc(&spec, 1.0).map_err(|e| e.to_string())?, DEFAULT_CREST_OVERSAMPLING)
        .map_err(|e| e.to_string())?);
    Ok(out)
}

/// Rows of `[snr_r_db, psr_quantile_db, psr_median_db, bound_db]`.
///
/// `bits = 0` runs the continuous-amplitude chain.
#[allow(clippy::too_many_arguments)]
pub fn psr_curve(
    length: usize,
    bits: u32,
    snr_a_db: f64,
    snr_r_start: f64,
    snr_r_step: f64,
    points: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>, String> {
    check_length(length)?;
    let spec = FzcSpec::new(length, 1).map_err(|e| e.to_string())?;
    let snr_r: Vec<f64> = (0..points)
        .map(|i| snr_r_start + i as f64 * snr_r_step)
        .filter(|&s| s <= snr_a_db)
        .collect();
    let mc = MonteCarloSpec::new(spec, snr_a_db, snr_r.clone())
        .with_quantizer((bits > 0).then(|| Quantizer::mid_rise(bits)))
        .with_trials(trials)
        .with_seed(seed);
    mc.validate().map_err(|e| e.to_string())?;
    let runner = TrialRunner::new(&mc).map_err(|e| e.to_string())?;
    let pairs = snr_r
        .iter()
        .map(|&s| NormalizedLink::new(s, snr_a_db).map(|l| (l, ChannelModel::identity())))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let rows = runner
        .run_points(&pairs, trials, mc.quantile_q, seed)
        .map_err(|e| e.to_string())?;
    let g_proc = processing_gain(length, 1).g_proc_db;
    Ok(rows
        .iter()
        .flat_map(|r| [r.snr_r_db, r.psr_quantile_db, r.psr_median_db, psr_bound(r.snr_r_db, g_proc)])
        .collect())
}

/// `[g_corr, g_avg, g_proc, dr_a, pl_min, pl_max]` in dB.
pub fn budget(ptx_max_dbm: f64, s_max_dbm: f64, snr_a_db: f64, length: usize, periods: usize) -> Result<Vec<f64>, String> {
    if length == 0 || periods == 0 {
        return Err("length and periods must be at least 1".into());
    }
    let b = link_budget(ptx_max_dbm, s_max_dbm, snr_a_db, length, periods);
    Ok(vec![b.g_corr_db, b.g_avg_db, b.g_proc_db, b.dr_a_db, b.pl_min_db, b.pl_max_db])
}

fn js(r: Result<Vec<f64>, String>) -> Result<Vec<f64>, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

/// Correlation traces; see [`traces`]. The last element is the crest factor.
#[wasm_bindgen(js_name = correlationTraces)]
pub fn correlation_traces_js(length: usize, bits: u32, awgn_db: f64, seed: u32) -> Result<Vec<f64>, JsValue> {
    js(traces(length, 1, bits, awgn_db, -60.0, seed as u64))
}

/// Monte-Carlo PSR curve; see [`psr_curve`].
#[wasm_bindgen(js_name = psrCurve)]
pub fn psr_curve_js(
    length: usize,
    bits: u32,
    snr_a_db: f64,
    snr_r_step: f64,
    trials: usize,
    seed: u32,
) -> Result<Vec<f64>, JsValue> {
    let points = if snr_r_step > 0.0 { (snr_a_db / snr_r_step).floor() as usize + 1 } else { 1 };
    js(psr_curve(length, bits, snr_a_db, 0.0, snr_r_step, points, trials, seed as u64))
}

/// Link budget; see [`budget`].
#[wasm_bindgen(js_name = linkBudget)]
pub fn link_budget_js(ptx_max_dbm: f64, s_max_dbm: f64, snr_a_db: f64, length: usize, periods: usize) -> Result<Vec<f64>, JsValue> {
    js(budget(ptx_max_dbm, s_max_dbm, snr_a_db, length, periods))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn traces_layout() {
        let v = traces(100, 1, 6, -30.0, -60.0, 1).unwrap();
        assert_eq!(v.len(), 201);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[100], 0.0);
        // quantized trace is mirror symmetric
        for k in 1..100 {
            assert!((v[k] - v[100 - k]).abs() < 1e-9);
        }
        assert!(v[200] > 0.0 && v[200] < 3.0);
        assert!(traces(MAX_LENGTH + 1, 1, 6, -30.0, -60.0, 1).is_err());
    }

    #[test]
    fn psr_curve_rows() {
        let v = psr_curve(1024, 0, 30.0, 0.0, 10.0, 4, 100, 2).unwrap();
        assert_eq!(v.len(), 16);
        assert_eq!(v[4], 10.0);
        assert!(v[13] > v[1]);
        assert!(psr_curve(1024, 0, 30.0, 0.0, 10.0, 4, 10, 2).is_err());
    }

    #[test]
    fn budget_values() {
        let b = budget(10.0, -50.0, 34.0, 200_000, 10).unwrap();
        assert!((b[2] - 63.0103).abs() < 1e-3);
        assert!((b[5] - (60.0 + b[3])).abs() < 1e-9);
    }
}
