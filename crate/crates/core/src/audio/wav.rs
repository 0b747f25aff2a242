//! Minimal RIFF/WAVE codec: PCM16 and float32 in, PCM16 out.

use std::fs;
use std::path::Path;

use super::AudioClip;
use crate::error::{CoreError, Result};

const FORMAT_PCM: u16 = 1;
const FORMAT_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

struct Fmt {
    format: u16,
    channels: u16,
    sample_rate: u32,
    bits: u16,
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Decode an in-memory WAV file; stereo is averaged to mono.
pub fn decode_wav(id: &str, bytes: &[u8]) -> Result<AudioClip> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(CoreError::Decode("missing RIFF/WAVE header".into()));
    }
    let mut fmt: Option<Fmt> = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let tag = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        // tolerate a truncated final data chunk
        let body_end = body_start.saturating_add(size).min(bytes.len());
        let body = &bytes[body_start..body_end];
        match tag {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(CoreError::Decode("fmt chunk too short".into()));
                }
                let mut format = u16_at(body, 0);
                if format == FORMAT_EXTENSIBLE {
                    if body.len() < 26 {
                        return Err(CoreError::Decode("extensible fmt chunk too short".into()));
                    }
                    format = u16_at(body, 24);
                }
                fmt = Some(Fmt {
                    format,
                    channels: u16_at(body, 2),
                    sample_rate: u32_at(body, 4),
                    bits: u16_at(body, 14),
                });
            }
            b"data" => data = Some(body),
            _ => {}
        }
        pos = body_start + size + (size & 1);
    }

    let fmt = fmt.ok_or_else(|| CoreError::Decode("no fmt chunk".into()))?;
    let data = data.ok_or_else(|| CoreError::Decode("no data chunk".into()))?;
    if fmt.sample_rate == 0 {
        return Err(CoreError::Decode("zero sample rate".into()));
    }
    if !(1..=2).contains(&fmt.channels) {
        return Err(CoreError::UnsupportedFormat(format!("{} channels", fmt.channels)));
    }
    let channels = usize::from(fmt.channels);

    let interleaved: Vec<f64> = match (fmt.format, fmt.bits) {
        (FORMAT_PCM, 16) => data
            .chunks_exact(2)
            .map(|c| f64::from(i16::from_le_bytes([c[0], c[1]])) / 32768.0)
            .collect(),
        (FORMAT_FLOAT, 32) => data
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
            .collect(),
        (f, b) => {
            return Err(CoreError::UnsupportedFormat(format!(
                "format tag {f} with {b} bits per sample"
            )))
        }
    };

    let samples: Vec<f64> = interleaved
        .chunks_exact(channels)
        .map(|frame| frame.iter().sum::<f64>() / channels as f64)
        .collect();
    if samples.is_empty() {
        return Err(CoreError::EmptyInput(format!("{id}: no audio samples")));
    }
    if samples.iter().any(|s| !s.is_finite()) {
        return Err(CoreError::Decode("non-finite float samples".into()));
    }
    Ok(AudioClip {
        id: id.to_string(),
        sample_rate: fmt.sample_rate,
        samples,
    })
}

/// Load a WAV file; the clip id is the file stem.
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioClip> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| CoreError::io(path, e))?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    decode_wav(&id, &bytes)
}

fn to_pcm16(x: f64) -> i16 {
    (x * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

/// Encode a mono clip as 16-bit PCM.
pub fn encode_wav_pcm16(clip: &AudioClip) -> Vec<u8> {
    let data_len = clip.samples.len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&clip.sample_rate.to_le_bytes());
    out.extend_from_slice(&(clip.sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in &clip.samples {
        out.extend_from_slice(&to_pcm16(s).to_le_bytes());
    }
    out
}

/// Write a clip as mono PCM16 (temp file + rename).
pub fn write_wav(path: impl AsRef<Path>, clip: &AudioClip) -> Result<()> {
    crate::io::write_atomic(path.as_ref(), &encode_wav_pcm16(clip))
}
