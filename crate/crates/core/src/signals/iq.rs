//! Headerless interleaved I/Q files.
//!
//! `.32cf` is little-endian IEEE-754 `f32`, I then Q, per sample. The 16-bit
//! fixed-point variant stores little-endian `i16` pairs scaled by 2^15.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex32;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const I16_SCALE: f32 = 32768.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleFormat {
    #[default]
    Cf32,
    Ci16,
}

impl SampleFormat {
    pub fn bytes_per_sample(&self) -> usize {
        match self {
            SampleFormat::Cf32 => 8,
            SampleFormat::Ci16 => 4,
        }
    }

    /// Bit width of one complex sample, I and Q together.
    pub fn bits_per_sample(&self) -> usize {
        self.bytes_per_sample() * 8
    }

    /// Raw input rate of a stream at `fs` complex samples per second.
    pub fn stream_rate_bps(&self, fs: f64) -> f64 {
        fs * self.bits_per_sample() as f64
    }
}

impl std::str::FromStr for SampleFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cf32" | "32cf" => Ok(SampleFormat::Cf32),
            "ci16" | "16sc" => Ok(SampleFormat::Ci16),
            other => Err(Error::invalid(
                "format",
                format!("unknown sample format `{other}`"),
            )),
        }
    }
}

pub fn encode_samples(samples: &[Complex32], format: SampleFormat) -> Vec<u8> {
    let mut out = Vec::with_capacity(samples.len() * format.bytes_per_sample());
    match format {
        SampleFormat::Cf32 => {
            for s in samples {
                out.extend_from_slice(&s.re.to_le_bytes());
                out.extend_from_slice(&s.im.to_le_bytes());
            }
        }
        SampleFormat::Ci16 => {
            let q = |v: f32| (v * I16_SCALE).round().clamp(-32768.0, 32767.0) as i16;
            for s in samples {
                out.extend_from_slice(&q(s.re).to_le_bytes());
                out.extend_from_slice(&q(s.im).to_le_bytes());
            }
        }
    }
    out
}

/// Decodes a whole number of samples; a trailing partial sample is a format error.
pub fn decode_samples(bytes: &[u8], format: SampleFormat) -> Result<Vec<Complex32>> {
    let width = format.bytes_per_sample();
    if !bytes.len().is_multiple_of(width) {
        return Err(Error::Format(format!(
            "{} bytes is not a whole number of {width}-byte {:?} samples",
            bytes.len(),
            format
        )));
    }
    let samples = match format {
        SampleFormat::Cf32 => bytes
            .chunks_exact(8)
            .map(|c| {
                Complex32::new(
                    f32::from_le_bytes([c[0], c[1], c[2], c[3]]),
                    f32::from_le_bytes([c[4], c[5], c[6], c[7]]),
                )
            })
            .collect(),
        SampleFormat::Ci16 => bytes
            .chunks_exact(4)
            .map(|c| {
                Complex32::new(
                    i16::from_le_bytes([c[0], c[1]]) as f32 / I16_SCALE,
                    i16::from_le_bytes([c[2], c[3]]) as f32 / I16_SCALE,
                )
            })
            .collect(),
    };
    Ok(samples)
}

pub fn write_iq_as(
    path: impl AsRef<Path>,
    samples: &[Complex32],
    format: SampleFormat,
) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(&encode_samples(samples, format))?;
    w.flush()?;
    Ok(())
}

pub fn read_iq_as(path: impl AsRef<Path>, format: SampleFormat) -> Result<Vec<Complex32>> {
    decode_samples(&fs::read(path)?, format)
}

/// Writes a `.32cf` file.
pub fn write_iq(path: impl AsRef<Path>, samples: &[Complex32]) -> Result<()> {
    write_iq_as(path, samples, SampleFormat::Cf32)
}

/// Reads a `.32cf` file.
pub fn read_iq(path: impl AsRef<Path>) -> Result<Vec<Complex32>> {
    read_iq_as(path, SampleFormat::Cf32)
}
