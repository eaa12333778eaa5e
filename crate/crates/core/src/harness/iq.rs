//! IQ recordings: a binary payload plus a JSON sidecar.
//!
//! Payload layout (little-endian):
//!
//! | offset | size | content                           |
//! |--------|------|-----------------------------------|
//! | 0      | 8    | magic `CSNDIQ\0\0`                |
//! | 8      | 4    | format version (`u32`, currently 1) |
//! | 12     | 4    | reserved, zero                    |
//! | 16     | 8    | sample count (`u64`)              |
//! | 24     | 8·n  | interleaved `f32` I, Q            |
//!
//! The sidecar lives next to the payload as `<payload>.json`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::correlator::Capture;
use crate::fzc::FzcSpec;
use crate::signal::ComplexSequence;

pub const IQ_MAGIC: [u8; 8] = *b"CSNDIQ\0\0";
pub const IQ_FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 24;

/// Sidecar contents.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IqMetadata {
    pub format_version: u32,
    pub sample_rate: f64,
    pub num_samples: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_frequency_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fzc: Option<FzcSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periods: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain_db: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, String>,
}

/// Sidecar as read from disk, before required fields are checked.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMetadata {
    format_version: Option<u32>,
    sample_rate: Option<f64>,
    num_samples: Option<u64>,
    center_frequency_hz: Option<f64>,
    fzc: Option<FzcSpec>,
    periods: Option<usize>,
    gain_db: Option<f64>,
    #[serde(default)]
    notes: BTreeMap<String, String>,
}

impl IqMetadata {
    pub fn for_sequence(seq: &ComplexSequence) -> Self {
        Self {
            format_version: IQ_FORMAT_VERSION,
            sample_rate: seq.sample_rate(),
            num_samples: seq.len() as u64,
            ..Default::default()
        }
    }

    pub fn for_capture(capture: &Capture) -> Self {
        Self {
            fzc: Some(*capture.spec()),
            periods: Some(capture.periods()),
            notes: capture.metadata.clone(),
            ..Self::for_sequence(capture.samples())
        }
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

/// Writes `seq` and its sidecar. Samples are stored as `f32`.
pub fn store_iq(seq: &ComplexSequence, path: &Path, metadata: &IqMetadata) -> Result<(), HarnessError> {
    let mut meta = metadata.clone();
    meta.format_version = IQ_FORMAT_VERSION;
    meta.sample_rate = seq.sample_rate();
    meta.num_samples = seq.len() as u64;

    let mut bytes = Vec::with_capacity(HEADER_LEN + 8 * seq.len());
    bytes.extend_from_slice(&IQ_MAGIC);
    bytes.extend_from_slice(&IQ_FORMAT_VERSION.to_le_bytes());
    bytes.extend_from_slice(&0u32.to_le_bytes());
    bytes.extend_from_slice(&(seq.len() as u64).to_le_bytes());
    for s in seq.samples() {
        bytes.extend_from_slice(&(s.re as f32).to_le_bytes());
        bytes.extend_from_slice(&(s.im as f32).to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| HarnessError::io(path, e))?;

    let side = sidecar_path(path);
    let mut json = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    json.push('\n');
    fs::write(&side, json).map_err(|e| HarnessError::io(side, e))
}

fn read_metadata(path: &Path) -> Result<IqMetadata, HarnessError> {
    let side = sidecar_path(path);
    let text = fs::read_to_string(&side).map_err(|e| HarnessError::io(&side, e))?;
    let raw: RawMetadata = serde_json::from_str(&text)
        .map_err(|e| HarnessError::validation(format!("{}: {e}", side.display())))?;
    let mut problems = Vec::new();
    if raw.sample_rate.is_none() {
        problems.push("sidecar missing sample_rate".to_owned());
    }
    if raw.num_samples.is_none() {
        problems.push("sidecar missing num_samples".to_owned());
    }
    match raw.format_version {
        None => problems.push("sidecar missing format_version".to_owned()),
        Some(v) if v != IQ_FORMAT_VERSION => problems.push(format!("unsupported sidecar version {v}")),
        _ => {}
    }
    if let Some(rate) = raw.sample_rate {
        if !(rate.is_finite() && rate > 0.0) {
            problems.push(format!("sample_rate must be positive, got {rate}"));
        }
    }
    if !problems.is_empty() {
        return Err(HarnessError::Validation(problems));
    }
    Ok(IqMetadata {
        format_version: IQ_FORMAT_VERSION,
        sample_rate: raw.sample_rate.unwrap_or_default(),
        num_samples: raw.num_samples.unwrap_or_default(),
        center_frequency_hz: raw.center_frequency_hz,
        fzc: raw.fzc,
        periods: raw.periods,
        gain_db: raw.gain_db,
        notes: raw.notes,
    })
}

/// Reads a recording and its sidecar.
pub fn load_iq_samples(path: &Path) -> Result<(ComplexSequence, IqMetadata), HarnessError> {
    let meta = read_metadata(path)?;
    let bytes = fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    if bytes.len() < HEADER_LEN || bytes[..8] != IQ_MAGIC {
        return Err(HarnessError::Format(format!("{}: bad magic", path.display())));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != IQ_FORMAT_VERSION {
        return Err(HarnessError::Format(format!(
            "{}: unsupported version {version}",
            path.display()
        )));
    }
    let declared = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let payload = &bytes[HEADER_LEN..];
    let actual = (payload.len() / 8) as u64;
    if payload.len() % 8 != 0 || actual != declared {
        return Err(HarnessError::Format(format!(
            "{}: expected {declared} samples, found {actual}{}",
            path.display(),
            if payload.len() % 8 != 0 { " and a partial sample" } else { "" }
        )));
    }
    if meta.num_samples != actual {
        return Err(HarnessError::MetadataMismatch {
            sidecar: meta.num_samples,
            payload: actual,
        });
    }
    let samples = payload
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes(c[..4].try_into().unwrap());
            let im = f32::from_le_bytes(c[4..].try_into().unwrap());
            Complex64::new(re as f64, im as f64)
        })
        .collect();
    let seq = ComplexSequence::new(samples, meta.sample_rate)?;
    Ok((seq, meta))
}

/// Reads a recording of a known FZC waveform as a [`Capture`].
pub fn load_iq(path: &Path) -> Result<Capture, HarnessError> {
    let (seq, meta) = load_iq_samples(path)?;
    let spec = meta
        .fzc
        .ok_or_else(|| HarnessError::validation("sidecar missing fzc waveform description"))?;
    let periods = meta.periods.unwrap_or(1);
    let mut capture = Capture::new(seq, spec, periods)?;
    capture.metadata = meta.notes;
    Ok(capture)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fzc::generate_fzc;

    #[test]
    fn roundtrip_capture() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cap.iq");
        let spec = FzcSpec::new(64, 1).unwrap();
        let seq = generate_fzc(&spec, 2e9).unwrap().repeat(2);
        let capture = Capture::new(seq, spec, 2).unwrap().with_metadata("attenuation_db", 30);
        store_iq(capture.samples(), &path, &IqMetadata::for_capture(&capture)).unwrap();
        let back = load_iq(&path).unwrap();
        assert_eq!(back.spec(), capture.spec());
        assert_eq!(back.periods(), 2);
        assert_eq!(back.metadata["attenuation_db"], "30");
        for (a, b) in back.samples().samples().iter().zip(capture.samples().samples()) {
            assert_eq!(a.re, b.re as f32 as f64);
            assert_eq!(a.im, b.im as f32 as f64);
        }
    }

    #[test]
    fn truncated_payload_names_counts() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.iq");
        let seq = ComplexSequence::new(vec![Complex64::new(0.5, -0.25); 10], 1e6).unwrap();
        store_iq(&seq, &path, &IqMetadata::for_sequence(&seq)).unwrap();
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 16]).unwrap();
        let err = load_iq_samples(&path).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, HarnessError::Format(_)));
        assert!(msg.contains("expected 10") && msg.contains("found 8"), "{msg}");
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn bad_magic_and_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.iq");
        let seq = ComplexSequence::new(vec![Complex64::new(1.0, 0.0); 4], 1e6).unwrap();
        store_iq(&seq, &path, &IqMetadata::for_sequence(&seq)).unwrap();

        let side = sidecar_path(&path);
        let text = fs::read_to_string(&side).unwrap().replace("\"num_samples\": 4", "\"num_samples\": 5");
        fs::write(&side, text).unwrap();
        assert!(matches!(
            load_iq_samples(&path),
            Err(HarnessError::MetadataMismatch { sidecar: 5, payload: 4 })
        ));

        let mut bytes = fs::read(&path).unwrap();
        bytes[0] = b'X';
        fs::write(&path, bytes).unwrap();
        assert!(matches!(load_iq_samples(&path), Err(HarnessError::Format(_))));
    }

    #[test]
    fn sidecar_without_sample_rate_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.iq");
        let seq = ComplexSequence::new(vec![Complex64::new(1.0, 0.0); 4], 1e6).unwrap();
        store_iq(&seq, &path, &IqMetadata::for_sequence(&seq)).unwrap();
        fs::write(sidecar_path(&path), r#"{"format_version": 1, "num_samples": 4}"#).unwrap();
        let err = load_iq_samples(&path).unwrap_err();
        assert!(matches!(&err, HarnessError::Validation(v) if v.iter().any(|m| m.contains("sample_rate"))));
        assert_eq!(err.exit_code(), 1);
    }
}
