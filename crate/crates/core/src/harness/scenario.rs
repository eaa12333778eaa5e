//! Declarative scenario files (TOML).
//!
//! ```toml
//! name = "example"
//!
//! [waveform]
//! length = 100000
//! root = 1
//! sample_rate = 2e9
//!
//! [receiver]
//! snr_a_db = 40.0
//! bits = 10
//!
//! [sweep]
//! snr_r_db = { start = 0.0, stop = 30.0, step = 10.0 }
//!
//! [acquisition]
//! trials = 200
//! seed = 1
//! ```
//!
//! Unknown keys are rejected. [`ScenarioFile::validate`] collects every
//! problem as a `section.key: message` line before anything runs.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::correlator::WindowSpec;
use crate::frontend::{ChannelModel, Quantizer, QuantizerKind, ReceiverModel, Tap};
use crate::fzc::FzcSpec;

fn one() -> f64 {
    1.0
}
fn root_default() -> usize {
    1
}
fn periods_default() -> usize {
    1
}
fn trials_default() -> usize {
    200
}
fn quantile_default() -> f64 {
    0.01
}
fn traces_bits_default() -> u32 {
    6
}
fn traces_awgn_default() -> f64 {
    -30.0
}
fn traces_floor_default() -> f64 {
    -60.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub description: Option<String>,
    pub waveform: WaveformConfig,
    #[serde(default)]
    pub receiver: ReceiverConfig,
    #[serde(default)]
    pub channel: ChannelConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub acquisition: AcquisitionConfig,
    #[serde(default)]
    pub processing: ProcessingConfig,
    #[serde(default)]
    pub traces: Option<TracesConfig>,
    /// Which keys reproduce given values and which are free choices.
    #[serde(default)]
    pub origin: Option<OriginConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveformConfig {
    pub length: usize,
    #[serde(default = "root_default")]
    pub root: usize,
    #[serde(default = "one")]
    pub sample_rate: f64,
}

/// Either a normalized receiver (`snr_a_db`) or an absolute one
/// (`noise_figure_db` and `max_input_dbm`, bandwidth defaulting to the
/// sample rate).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverConfig {
    #[serde(default)]
    pub snr_a_db: Option<f64>,
    #[serde(default)]
    pub bandwidth_hz: Option<f64>,
    #[serde(default)]
    pub gain_db: Option<f64>,
    #[serde(default)]
    pub noise_figure_db: Option<f64>,
    #[serde(default)]
    pub max_input_dbm: Option<f64>,
    /// Absent means continuous amplitude.
    #[serde(default)]
    pub bits: Option<u32>,
    #[serde(default)]
    pub quantizer: QuantizerKind,
    #[serde(default = "one")]
    pub fullscale: f64,
}

impl Default for ReceiverConfig {
    fn default() -> Self {
        Self {
            snr_a_db: None,
            bandwidth_hz: None,
            gain_db: None,
            noise_figure_db: None,
            max_input_dbm: None,
            bits: None,
            quantizer: QuantizerKind::default(),
            fullscale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    /// Empty means a unity single-tap channel.
    #[serde(default)]
    pub taps: Vec<TapConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TapConfig {
    pub delay: usize,
    #[serde(default)]
    pub gain_db: f64,
    #[serde(default)]
    pub phase_deg: f64,
}

/// Sweep values as an explicit list or an inclusive range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisValues {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl AxisValues {
    pub fn values(&self) -> Vec<f64> {
        match self {
            AxisValues::List(v) => v.clone(),
            AxisValues::Range { start, stop, step } => {
                if !(step.is_finite() && *step > 0.0) || stop < start {
                    return Vec::new();
                }
                let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
                (0..count).map(|i| start + i as f64 * step).collect()
            }
        }
    }
}

/// The swept quantity of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Received SNR set by backoff below full scale.
    SnrR,
    /// Flat attenuation in front of the receiver at full-scale drive.
    Attenuation,
    /// Absolute input level; needs an absolute receiver.
    InputDbm,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub snr_r_db: Option<AxisValues>,
    #[serde(default)]
    pub attenuation_db: Option<AxisValues>,
    #[serde(default)]
    pub input_dbm: Option<AxisValues>,
    /// Overrides `waveform.length`.
    #[serde(default)]
    pub lengths: Option<Vec<usize>>,
    /// Overrides `receiver.bits`.
    #[serde(default)]
    pub bits: Option<Vec<u32>>,
    /// Adds a continuous-amplitude run next to the quantized ones.
    #[serde(default)]
    pub include_unquantized: bool,
    /// Overrides `receiver.snr_a_db`.
    #[serde(default)]
    pub snr_a_db: Option<Vec<f64>>,
    /// Overrides `acquisition.periods`.
    #[serde(default)]
    pub periods: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcquisitionConfig {
    #[serde(default = "periods_default")]
    pub periods: usize,
    #[serde(default = "trials_default")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        Self {
            periods: periods_default(),
            trials: trials_default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessingConfig {
    #[serde(default)]
    pub window: WindowSpec,
    /// Defaults to the mainlobe half-width of the window.
    #[serde(default)]
    pub excluded_halfwidth: Option<usize>,
    #[serde(default = "quantile_default")]
    pub quantile: f64,
}

impl Default for ProcessingConfig {
    fn default() -> Self {
        Self {
            window: WindowSpec::default(),
            excluded_halfwidth: None,
            quantile: quantile_default(),
        }
    }
}

/// Correlation traces of one sequence against a quantized copy and a noisy
/// copy, normalized to their peaks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TracesConfig {
    #[serde(default = "traces_bits_default")]
    pub bits: u32,
    /// Noise power relative to the signal power, dB.
    #[serde(default = "traces_awgn_default")]
    pub awgn_db: f64,
    /// Values below this level are clamped to it, dB.
    #[serde(default = "traces_floor_default")]
    pub floor_db: f64,
}

impl Default for TracesConfig {
    fn default() -> Self {
        Self {
            bits: traces_bits_default(),
            awgn_db: traces_awgn_default(),
            floor_db: traces_floor_default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OriginConfig {
    /// Keys whose values reproduce a published configuration.
    #[serde(default)]
    pub given: Vec<String>,
    /// Keys whose values were picked to fill gaps.
    #[serde(default)]
    pub chosen: Vec<String>,
    #[serde(default)]
    pub notes: BTreeMap<String, String>,
}

impl ScenarioFile {
    /// Parses and validates a scenario.
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| HarnessError::validation(e.message().to_owned() + &span_hint(text, e.span())))?;
        file.validate()?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            HarnessError::Validation(msgs) => {
                HarnessError::Validation(msgs.into_iter().map(|m| format!("{}: {m}", path.display())).collect())
            }
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn is_absolute(&self) -> bool {
        self.receiver.noise_figure_db.is_some() || self.receiver.max_input_dbm.is_some()
    }

    /// Absolute receiver description, if the scenario gives one.
    pub fn receiver_model(&self) -> Option<ReceiverModel> {
        let r = &self.receiver;
        self.is_absolute().then(|| ReceiverModel {
            bandwidth_hz: r.bandwidth_hz.unwrap_or(self.waveform.sample_rate),
            gain_db: r.gain_db.unwrap_or(0.0),
            noise_figure_db: r.noise_figure_db.unwrap_or(0.0),
            max_input_dbm: r.max_input_dbm.unwrap_or(0.0),
            quantizer_bits: r.bits,
            fullscale: r.fullscale,
        })
    }

    /// Achievable SNR values to run, in order.
    pub fn snr_a_values(&self) -> Vec<f64> {
        if let Some(rx) = self.receiver_model() {
            return vec![rx.achievable_snr_db()];
        }
        match self.sweep.as_ref().and_then(|s| s.snr_a_db.clone()) {
            Some(list) => list,
            None => vec![self.receiver.snr_a_db.unwrap_or(f64::INFINITY)],
        }
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.sweep
            .as_ref()
            .and_then(|s| s.lengths.clone())
            .unwrap_or_else(|| vec![self.waveform.length])
    }

    pub fn period_values(&self) -> Vec<usize> {
        self.sweep
            .as_ref()
            .and_then(|s| s.periods.clone())
            .unwrap_or_else(|| vec![self.acquisition.periods])
    }

    /// Quantizers to run; `None` is the continuous-amplitude chain.
    pub fn quantizers(&self) -> Vec<Option<Quantizer>> {
        let kind = self.receiver.quantizer;
        let make = |bits| Some(Quantizer { bits, kind });
        let sweep = self.sweep.as_ref();
        let mut out: Vec<Option<Quantizer>> = match sweep.and_then(|s| s.bits.as_ref()) {
            Some(list) => list.iter().map(|&b| make(b)).collect(),
            None => vec![self.receiver.bits.and_then(make)],
        };
        if sweep.is_some_and(|s| s.include_unquantized) && !out.contains(&None) {
            out.push(None);
        }
        out
    }

    pub fn channel_model(&self) -> Result<ChannelModel, HarnessError> {
        if self.channel.taps.is_empty() {
            return Ok(ChannelModel::identity());
        }
        let taps = self
            .channel
            .taps
            .iter()
            .map(|t| Tap {
                delay: t.delay,
                gain: Complex64::from_polar(crate::db_to_amplitude(t.gain_db), t.phase_deg.to_radians()),
            })
            .collect();
        Ok(ChannelModel::new(taps)?)
    }

    /// The swept axis and its values.
    pub fn axis(&self) -> Option<(SweepAxis, Vec<f64>)> {
        let s = self.sweep.as_ref()?;
        [
            (SweepAxis::SnrR, &s.snr_r_db),
            (SweepAxis::Attenuation, &s.attenuation_db),
            (SweepAxis::InputDbm, &s.input_dbm),
        ]
        .into_iter()
        .find_map(|(axis, values)| values.as_ref().map(|v| (axis, v.values())))
    }

    /// Checks every field and reports all problems at once.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let mut errs = Vec::new();
        let mut err = |field: &str, msg: String| errs.push(format!("{field}: {msg}"));

        let lengths = self.lengths();
        for &n in &lengths {
            if let Err(e) = FzcSpec::new(n, self.waveform.root) {
                err("waveform", e.to_string());
            }
        }
        if !(self.waveform.sample_rate.is_finite() && self.waveform.sample_rate > 0.0) {
            err("waveform.sample_rate", format!("must be positive, got {}", self.waveform.sample_rate));
        }

        let r = &self.receiver;
        if self.is_absolute() {
            if r.snr_a_db.is_some() {
                err("receiver.snr_a_db", "give either snr_a_db or an absolute receiver, not both".into());
            }
            if r.noise_figure_db.is_none() || r.max_input_dbm.is_none() {
                err("receiver", "an absolute receiver needs noise_figure_db and max_input_dbm".into());
            }
            if let Some(Err(e)) = self.receiver_model().map(|m| m.validate()) {
                err("receiver", e.to_string());
            }
            if self.sweep.as_ref().is_some_and(|s| s.snr_a_db.is_some()) {
                err("sweep.snr_a_db", "not allowed with an absolute receiver".into());
            }
        } else if r.bandwidth_hz.is_some() || r.gain_db.is_some() {
            err("receiver", "bandwidth_hz and gain_db need noise_figure_db and max_input_dbm".into());
        }
        if let Some(snr) = r.snr_a_db {
            if snr.is_nan() {
                err("receiver.snr_a_db", "must be a number".into());
            }
        }
        if r.bits == Some(0) {
            err("receiver.bits", "must be at least 1".into());
        }
        if !(r.fullscale.is_finite() && r.fullscale > 0.0) {
            err("receiver.fullscale", format!("must be positive, got {}", r.fullscale));
        }

        let mut delays = self.channel.taps.iter().map(|t| t.delay);
        if let Some(first) = delays.next() {
            let mut prev = first;
            for d in delays {
                if d <= prev {
                    err("channel.taps", "delays must be strictly increasing".into());
                    break;
                }
                prev = d;
            }
            let min_len = lengths.iter().copied().min().unwrap_or(0);
            if let Some(t) = self.channel.taps.iter().find(|t| t.delay >= min_len) {
                err("channel.taps", format!("delay {} not below sequence length {min_len}", t.delay));
            }
            if self.channel.taps.iter().any(|t| !t.gain_db.is_finite() || !t.phase_deg.is_finite()) {
                err("channel.taps", "gains and phases must be finite".into());
            }
        }

        let a = &self.acquisition;
        if a.periods == 0 {
            err("acquisition.periods", "must be at least 1".into());
        }
        if a.trials == 0 {
            err("acquisition.trials", "must be at least 1".into());
        }

        let p = &self.processing;
        if !p.window.is_valid() {
            err("processing.window", format!("invalid window {:?}", p.window));
        }
        if !(0.0..=1.0).contains(&p.quantile) {
            err("processing.quantile", format!("must lie in [0, 1], got {}", p.quantile));
        } else {
            let tail = p.quantile.min(1.0 - p.quantile);
            if tail > 0.0 && (a.trials as f64) * tail < 1.0 - 1e-9 {
                err(
                    "acquisition.trials",
                    format!("{} trials leave no expected sample beyond the {} quantile", a.trials, p.quantile),
                );
            }
        }

        match (&self.sweep, &self.traces) {
            (None, None) => err("sweep", "a scenario needs a [sweep] or a [traces] section".into()),
            (Some(_), Some(_)) => err("traces", "cannot be combined with [sweep]".into()),
            (None, Some(t)) => {
                if t.bits == 0 {
                    err("traces.bits", "must be at least 1".into());
                }
                if !t.awgn_db.is_finite() || !t.floor_db.is_finite() {
                    err("traces", "levels must be finite".into());
                }
            }
            (Some(s), None) => self.validate_sweep(s, &mut err),
        }

        if errs.is_empty() {
            Ok(())
        } else {
            Err(HarnessError::Validation(errs))
        }
    }

    fn validate_sweep(&self, s: &SweepConfig, err: &mut impl FnMut(&str, String)) {
        let axes = [&s.snr_r_db, &s.attenuation_db, &s.input_dbm]
            .iter()
            .filter(|a| a.is_some())
            .count();
        if axes != 1 {
            err("sweep", format!("exactly one of snr_r_db, attenuation_db, input_dbm is required, found {axes}"));
            return;
        }
        let Some((axis, values)) = self.axis() else { return };
        if values.is_empty() {
            err("sweep", "the swept axis has no values".into());
        }
        if values.iter().any(|v| !v.is_finite()) {
            err("sweep", "swept values must be finite".into());
        }
        if let Some(list) = &s.lengths {
            if list.is_empty() {
                err("sweep.lengths", "must not be empty".into());
            }
        }
        if let Some(list) = &s.bits {
            if list.is_empty() && !s.include_unquantized {
                err("sweep.bits", "must not be empty".into());
            }
            if list.contains(&0) {
                err("sweep.bits", "every entry must be at least 1".into());
            }
        }
        if let Some(list) = &s.periods {
            if list.is_empty() || list.contains(&0) {
                err("sweep.periods", "entries must be at least 1 and the list nonempty".into());
            }
        }
        if let Some(list) = &s.snr_a_db {
            if list.is_empty() || list.iter().any(|v| v.is_nan()) {
                err("sweep.snr_a_db", "must be a nonempty list of numbers".into());
            }
        }
        if !self.is_absolute() && self.receiver.snr_a_db.is_none() && s.snr_a_db.is_none() {
            err("receiver.snr_a_db", "required unless the receiver is absolute or sweep.snr_a_db is set".into());
        }
        match axis {
            SweepAxis::SnrR => {
                for snr_a in self.snr_a_values() {
                    if let Some(v) = values.iter().find(|&&v| v > snr_a) {
                        err("sweep.snr_r_db", format!("{v} dB exceeds the achievable SNR {snr_a} dB"));
                    }
                }
            }
            SweepAxis::Attenuation => {}
            SweepAxis::InputDbm => match self.receiver_model() {
                None => err("sweep.input_dbm", "needs an absolute receiver".into()),
                Some(rx) => {
                    if let Some(v) = values.iter().find(|&&v| v > rx.max_input_dbm) {
                        err(
                            "sweep.input_dbm",
                            format!("{v} dBm overloads the receiver (max {} dBm)", rx.max_input_dbm),
                        );
                    }
                }
            },
        }
    }
}

fn span_hint(text: &str, span: Option<std::ops::Range<usize>>) -> String {
    match span {
        Some(r) => {
            let line = text[..r.start.min(text.len())].matches('\n').count() + 1;
            format!(" (line {line})")
        }
        None => String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
        name = "basic"
        [waveform]
        length = 1000
        [receiver]
        snr_a_db = 40.0
        bits = 10
        [sweep]
        snr_r_db = { start = 0.0, stop = 30.0, step = 10.0 }
        lengths = [1000, 10000]
        include_unquantized = true
    "#;

    #[test]
    fn parses_with_defaults() {
        let s = ScenarioFile::from_toml_str(BASIC).unwrap();
        assert_eq!(s.acquisition.trials, 200);
        assert_eq!(s.processing.window, WindowSpec::Chebyshev { sidelobe_db: 100.0 });
        assert_eq!(s.axis(), Some((SweepAxis::SnrR, vec![0.0, 10.0, 20.0, 30.0])));
        assert_eq!(s.lengths(), vec![1000, 10000]);
        assert_eq!(s.quantizers(), vec![Some(Quantizer::mid_rise(10)), None]);
        assert_eq!(s.snr_a_values(), vec![40.0]);
        let back = ScenarioFile::from_toml_str(&s.to_toml_string()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = BASIC.replace("snr_a_db = 40.0", "snr_a = 40.0");
        let err = ScenarioFile::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("snr_a"), "{err}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn collects_field_messages() {
        let text = r#"
            [waveform]
            length = 100
            root = 2
            [receiver]
            snr_a_db = 20.0
            bits = 0
            [sweep]
            snr_r_db = [0.0, 30.0]
            [acquisition]
            trials = 50
        "#;
        let HarnessError::Validation(msgs) = ScenarioFile::from_toml_str(text).unwrap_err() else {
            panic!()
        };
        let joined = msgs.join("\n");
        for key in ["waveform:", "receiver.bits:", "sweep.snr_r_db:", "acquisition.trials:"] {
            assert!(joined.contains(key), "{key} missing in\n{joined}");
        }
    }

    #[test]
    fn absolute_receiver() {
        let text = r#"
            [waveform]
            length = 1000
            sample_rate = 2e9
            [receiver]
            noise_figure_db = 10.0
            max_input_dbm = -30.0
            [sweep]
            input_dbm = [-40.0, -35.0]
        "#;
        let s = ScenarioFile::from_toml_str(text).unwrap();
        let snr_a = s.snr_a_values()[0];
        assert!((snr_a - (-30.0 + 80.99 - 10.0)).abs() < 0.01, "{snr_a}");
        let overload = text.replace("-35.0]", "-20.0]");
        assert!(ScenarioFile::from_toml_str(&overload).is_err());
    }

    #[test]
    fn needs_exactly_one_axis() {
        let text = BASIC.replace("include_unquantized = true", "attenuation_db = [0.0]");
        assert!(ScenarioFile::from_toml_str(&text).is_err());
    }

    #[test]
    fn range_values() {
        let r = AxisValues::Range { start: 0.0, stop: 90.0, step: 10.0 };
        assert_eq!(r.values().len(), 10);
        let r = AxisValues::Range { start: 0.0, stop: 1.0, step: 0.3 };
        assert_eq!(r.values().len(), 4);
    }
}
