//! Scenario execution.

use crate::correlator::{periodic_xcorr, Capture};
use crate::frontend::{
    derive_link, ChannelModel, NormalizedLink, Quantizer, QuantizerKind, ReceiverModel, SimulatedReceiver, Tap,
};
use crate::fzc::{generate_fzc, FzcSpec};
use crate::metrics::{MonteCarloSpec, TrialRunner};

use super::scenario::{ScenarioFile, SweepAxis, TracesConfig};
use super::table::{Cell, RunMetadata, SweepResultTable};
use super::HarnessError;

/// One resolved sweep point.
struct Point {
    link: NormalizedLink,
    channel: ChannelModel,
    snr_r_db: f64,
    attenuation_db: Option<f64>,
    input_dbm: Option<f64>,
}

fn channel_gain_db(channel: &ChannelModel) -> f64 {
    crate::power_db(channel.taps().iter().map(|t| t.gain.norm_sqr()).sum())
}

fn attenuated(channel: &ChannelModel, attenuation_db: f64) -> Result<ChannelModel, HarnessError> {
    let scale = crate::db_to_amplitude(-attenuation_db);
    let taps = channel
        .taps()
        .iter()
        .map(|t| Tap {
            delay: t.delay,
            gain: t.gain * scale,
        })
        .collect();
    Ok(ChannelModel::new(taps)?)
}

fn resolve_point(
    axis: SweepAxis,
    value: f64,
    snr_a_db: f64,
    base: &ChannelModel,
    rx: Option<&ReceiverModel>,
) -> Result<Point, HarnessError> {
    let base_gain = channel_gain_db(base);
    let point = match axis {
        SweepAxis::SnrR => {
            let link = NormalizedLink::new(value, snr_a_db)?;
            Point {
                snr_r_db: value + base_gain,
                link,
                channel: base.clone(),
                attenuation_db: None,
                input_dbm: None,
            }
        }
        SweepAxis::Attenuation => Point {
            link: NormalizedLink::full_scale(snr_a_db),
            channel: attenuated(base, value)?,
            snr_r_db: snr_a_db - value + base_gain,
            attenuation_db: Some(value),
            input_dbm: None,
        },
        SweepAxis::InputDbm => {
            let rx = rx.ok_or_else(|| HarnessError::validation("sweep.input_dbm: needs an absolute receiver"))?;
            let link = derive_link(rx, value)?;
            Point {
                snr_r_db: link.snr_r_db() + base_gain,
                link,
                channel: base.clone(),
                attenuation_db: None,
                input_dbm: Some(value),
            }
        }
    };
    Ok(point)
}

fn quantile_column(q: f64) -> String {
    let pct = q * 100.0;
    if (pct - pct.round()).abs() < 1e-9 && (0.0..=100.0).contains(&pct) {
        format!("psr_q{:02}_db", pct.round() as u32)
    } else {
        format!("psr_q{q}_db")
    }
}

fn bits_cell(q: Option<Quantizer>) -> Cell {
    match q {
        Some(q) => Cell::Int(q.bits as i64),
        None => Cell::Text("none".into()),
    }
}

/// Executes a validated scenario.
///
/// Sweep scenarios produce one row per (achievable SNR, length, quantizer,
/// periods, swept value), in that nesting order. Every combination uses the
/// same master seed, so runs differing only in `L` or `K` see the same noise.
pub fn run_scenario(file: &ScenarioFile) -> Result<SweepResultTable, HarnessError> {
    file.validate()?;
    if let Some(traces) = &file.traces {
        let spec = FzcSpec::new(file.waveform.length, file.waveform.root)?;
        let mut table = correlation_traces(
            &spec,
            file.waveform.sample_rate,
            traces,
            file.receiver.quantizer,
            file.acquisition.seed,
        )?;
        table.metadata.scenario = file.name.clone();
        return Ok(table);
    }
    let (axis, values) = file
        .axis()
        .ok_or_else(|| HarnessError::validation("sweep: no swept axis"))?;
    let rx = file.receiver_model();
    let base = file.channel_model()?;
    let seed = file.acquisition.seed;
    let q = file.processing.quantile;

    let columns = [
        "snr_r_db",
        &quantile_column(q),
        "psr_mean_db",
        "psr_median_db",
        "peak_db",
        "floor_db",
        "attenuation_db",
        "input_dbm",
        "trials",
        "N",
        "L",
        "K",
        "snr_a_db",
        "seed",
    ]
    .map(str::to_owned)
    .to_vec();
    let mut metadata = RunMetadata::new(file.name.clone(), seed);
    metadata.extra.insert("window".into(), format!("{:?}", file.processing.window));
    metadata.extra.insert("quantile".into(), q.to_string());
    let mut table = SweepResultTable::new(columns, metadata);

    for snr_a in file.snr_a_values() {
        let points = values
            .iter()
            .map(|&v| resolve_point(axis, v, snr_a, &base, rx.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        let pairs: Vec<_> = points.iter().map(|p| (p.link, p.channel.clone())).collect();
        for n in file.lengths() {
            let fzc = FzcSpec::new(n, file.waveform.root)?;
            for quantizer in file.quantizers() {
                for k in file.period_values() {
                    let spec = MonteCarloSpec {
                        fzc,
                        sample_rate: file.waveform.sample_rate,
                        snr_a_db: snr_a,
                        snr_r_db: Vec::new(),
                        quantizer,
                        fullscale: file.receiver.fullscale,
                        periods: k,
                        trials: file.acquisition.trials,
                        quantile_q: q,
                        master_seed: seed,
                        window: file.processing.window,
                        excluded_halfwidth: file.processing.excluded_halfwidth,
                    };
                    spec.validate()?;
                    let rows = TrialRunner::new(&spec)?.run_points(&pairs, spec.trials, q, seed)?;
                    for (point, row) in points.iter().zip(rows) {
                        table.push_row(vec![
                            point.snr_r_db.into(),
                            row.psr_quantile_db.into(),
                            row.psr_mean_db.into(),
                            row.psr_median_db.into(),
                            row.peak_median_db.into(),
                            row.floor_median_db.into(),
                            point.attenuation_db.into(),
                            point.input_dbm.into(),
                            row.trials.into(),
                            n.into(),
                            bits_cell(quantizer),
                            k.into(),
                            snr_a.into(),
                            seed.into(),
                        ]);
                    }
                }
            }
        }
    }
    Ok(table)
}

/// Magnitude of the correlation between an FZC sequence and two impaired
/// copies of it: one quantized with `traces.bits` bits at full scale, one with
/// additive noise `traces.awgn_db` below the signal power. Each trace is
/// normalized to its own peak and clamped at `traces.floor_db`.
///
/// Columns: `lag`, `delay_s`, `quantized_db`, `awgn_db`.
pub fn correlation_traces(
    spec: &FzcSpec,
    sample_rate: f64,
    traces: &TracesConfig,
    kind: QuantizerKind,
    seed: u64,
) -> Result<SweepResultTable, HarnessError> {
    if traces.bits == 0 {
        return Err(HarnessError::validation("traces.bits: must be at least 1"));
    }
    let tx = generate_fzc(spec, sample_rate)?;
    let identity = ChannelModel::identity();
    let quantizer = Quantizer { bits: traces.bits, kind };
    let quantized = SimulatedReceiver::new(&tx, 1.0, Some(quantizer))?.receive(
        &identity,
        &NormalizedLink::noiseless(),
        1,
        seed,
    )?;
    let noisy = SimulatedReceiver::new(&tx, 1.0, None)?.receive(
        &identity,
        &NormalizedLink::full_scale(-traces.awgn_db),
        1,
        seed,
    )?;

    let to_db = |rx| -> Result<Vec<f64>, HarnessError> {
        let c = periodic_xcorr(rx, &tx)?;
        let mags: Vec<f64> = c.samples().iter().map(|v| v.norm()).collect();
        let peak = mags.iter().copied().fold(0.0, f64::max);
        Ok(mags
            .iter()
            .map(|&m| crate::amplitude_db(m / peak).max(traces.floor_db))
            .collect())
    };
    let q_db = to_db(&quantized)?;
    let n_db = to_db(&noisy)?;

    let columns = ["lag", "delay_s", "quantized_db", "awgn_db"].map(str::to_owned).to_vec();
    let mut metadata = RunMetadata::new(None, seed);
    metadata.extra.insert("N".into(), spec.length().to_string());
    metadata.extra.insert("root".into(), spec.root().to_string());
    metadata.extra.insert("bits".into(), traces.bits.to_string());
    metadata.extra.insert("awgn_db".into(), traces.awgn_db.to_string());
    let mut table = SweepResultTable::new(columns, metadata);
    for (lag, (q, n)) in q_db.into_iter().zip(n_db).enumerate() {
        table.push_row(vec![lag.into(), (lag as f64 / sample_rate).into(), q.into(), n.into()]);
    }
    Ok(table)
}

/// Simulates one capture of the scenario's first configuration.
///
/// `axis_value` picks the point on the swept axis (default: its first
/// value); scenarios without a sweep are captured at full scale.
pub fn simulate_capture(file: &ScenarioFile, axis_value: Option<f64>) -> Result<Capture, HarnessError> {
    file.validate()?;
    let n = file.lengths()[0];
    let spec = FzcSpec::new(n, file.waveform.root)?;
    let snr_a = file.snr_a_values()[0];
    let quantizer = file.quantizers()[0];
    let periods = file.period_values()[0];
    let base = file.channel_model()?;
    let rx = file.receiver_model();
    let point = match file.axis() {
        Some((axis, values)) => {
            let value = axis_value.unwrap_or(values[0]);
            resolve_point(axis, value, snr_a, &base, rx.as_ref())?
        }
        None => resolve_point(SweepAxis::SnrR, axis_value.unwrap_or(snr_a), snr_a, &base, rx.as_ref())?,
    };

    let tx = generate_fzc(&spec, file.waveform.sample_rate)?;
    let seed = file.acquisition.seed;
    let samples = SimulatedReceiver::new(&tx, file.receiver.fullscale, quantizer)?.receive(
        &point.channel,
        &point.link,
        periods,
        seed,
    )?;
    let mut capture = Capture::new(samples, spec, periods)?
        .with_metadata("snr_a_db", snr_a)
        .with_metadata("snr_r_db", point.snr_r_db)
        .with_metadata("seed", seed)
        .with_metadata(
            "bits",
            quantizer.map_or_else(|| "none".to_owned(), |q| q.bits.to_string()),
        );
    if let Some(a) = point.attenuation_db {
        capture = capture.with_metadata("attenuation_db", a);
    }
    if let Some(p) = point.input_dbm {
        capture = capture.with_metadata("input_dbm", p);
    }
    if let Some(name) = &file.name {
        capture = capture.with_metadata("scenario", name);
    }
    Ok(capture)
}
