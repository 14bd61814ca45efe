//! On-disk signal formats.
//!
//! Envelope files are raw little-endian `f32`, one amplitude per sample, with a
//! JSON sidecar at `<file>.json`. IQ files are interleaved little-endian `f32`
//! I/Q pairs and are converted to an envelope by magnitude.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{EnvelopeSignal, WaveformError};
use crate::frames::LineCode;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JammerMeta {
    pub duty_cycle: f64,
    pub burst_ms: f64,
    pub amplitude: f64,
}

/// Sidecar describing an envelope file.
///
/// The channel fields are optional; when present they either record what was
/// applied or configure a later `channel` step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeMeta {
    pub sample_rate: u32,
    pub bit_time_ms: f64,
    pub scheme: LineCode,
    pub payload_bits: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_cm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jammer: Option<JammerMeta>,
}

pub fn metadata_path(envelope: &Path) -> PathBuf {
    let mut name = envelope.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

pub fn write_envelope(path: &Path, signal: &EnvelopeSignal) -> Result<(), WaveformError> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for s in signal.samples() {
        w.write_all(&s.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_f32_le(path: &Path) -> Result<Vec<f32>, WaveformError> {
    let bytes = fs::read(path)?;
    if bytes.len() % 4 != 0 {
        return Err(WaveformError::Format(format!(
            "{} is {} bytes, not a whole number of f32 samples",
            path.display(),
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

pub fn read_envelope(path: &Path, sample_rate: u32) -> Result<EnvelopeSignal, WaveformError> {
    EnvelopeSignal::new(read_f32_le(path)?, sample_rate)
}

/// Reads interleaved I/Q and returns `sqrt(I² + Q²)` per pair.
pub fn read_iq(path: &Path, sample_rate: u32) -> Result<EnvelopeSignal, WaveformError> {
    let raw = read_f32_le(path)?;
    if raw.len() % 2 != 0 {
        return Err(WaveformError::Format(format!(
            "{} holds an odd number of floats; expected I/Q pairs",
            path.display()
        )));
    }
    let mag = raw.chunks_exact(2).map(|p| p[0].hypot(p[1])).collect();
    EnvelopeSignal::new(mag, sample_rate)
}

pub fn write_metadata(envelope: &Path, meta: &EnvelopeMeta) -> Result<(), WaveformError> {
    let text = serde_json::to_string_pretty(meta)?;
    fs::write(metadata_path(envelope), text + "\n")?;
    Ok(())
}

pub fn read_metadata(envelope: &Path) -> Result<EnvelopeMeta, WaveformError> {
    let text = fs::read_to_string(metadata_path(envelope))?;
    Ok(serde_json::from_str(&text)?)
}
