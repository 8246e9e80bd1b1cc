//! Mono audio loading, saving, and validation.
//!
//! Everything downstream operates on [`AudioBuffer`]: a finite, non-empty
//! mono sample sequence in [-1, 1] plus its sample rate. Multi-channel
//! files are averaged to mono on load; no resampling happens anywhere in
//! this crate, so operations that care about the rate check it and fail
//! loudly instead.

use std::io;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("cannot read {path}: {source}")]
    Unreadable {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Unwritable {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}: not a readable RIFF/WAVE file: {reason}")]
    MalformedWav { path: String, reason: String },
    #[error("{path}: unsupported codec: {detail} (only PCM16 and IEEE float32 are supported)")]
    UnsupportedCodec { path: String, detail: String },
    #[error("{path}: file contains no audio samples")]
    ZeroLength { path: String },
    #[error("buffer is empty")]
    EmptyBuffer,
    #[error("buffer contains a non-finite sample at index {index}")]
    NonFiniteSample { index: usize },
}

/// On-disk sample encoding for [`save_wav`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavEncoding {
    /// 16-bit signed PCM; amplitudes outside [-1, 1] saturate.
    Pcm16,
    /// 32-bit IEEE float, lossless for float32-representable samples.
    Float32,
}

/// Mono audio in memory: samples plus sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Self {
        AudioBuffer {
            samples,
            sample_rate,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Checks the invariants all processing operations rely on:
    /// non-empty and every sample finite.
    pub fn validate(&self) -> Result<(), AudioError> {
        if self.samples.is_empty() {
            return Err(AudioError::EmptyBuffer);
        }
        if let Some(index) = self.samples.iter().position(|s| !s.is_finite()) {
            return Err(AudioError::NonFiniteSample { index });
        }
        Ok(())
    }

    /// Mean power (mean of squared samples) over `range`.
    pub fn power(&self, range: std::ops::Range<usize>) -> f64 {
        let slice = &self.samples[range];
        if slice.is_empty() {
            return 0.0;
        }
        slice.iter().map(|s| s * s).sum::<f64>() / slice.len() as f64
    }
}

/// Loads a RIFF/WAVE file (PCM16 or IEEE float32, any channel count) as a
/// mono buffer. Multi-channel audio is averaged across channels; PCM16
/// samples are scaled by 1/32768.
pub fn load_wav(path: &Path) -> Result<AudioBuffer, AudioError> {
    let display = path.display().to_string();
    let reader = hound::WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(source) => AudioError::Unreadable {
            path: display.clone(),
            source,
        },
        other => AudioError::MalformedWav {
            path: display.clone(),
            reason: other.to_string(),
        },
    })?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(AudioError::MalformedWav {
            path: display,
            reason: "zero channels".into(),
        });
    }

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<Result<_, _>>()
            .map_err(|e| AudioError::MalformedWav {
                path: display.clone(),
                reason: e.to_string(),
            })?,
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<Result<_, _>>()
            .map_err(|e| AudioError::MalformedWav {
                path: display.clone(),
                reason: e.to_string(),
            })?,
        (format, bits) => {
            return Err(AudioError::UnsupportedCodec {
                path: display,
                detail: format!("{format:?} with {bits} bits per sample"),
            })
        }
    };

    if interleaved.is_empty() {
        return Err(AudioError::ZeroLength { path: display });
    }

    let samples = if channels == 1 {
        interleaved
    } else {
        interleaved
            .chunks(channels)
            .map(|frame| frame.iter().sum::<f64>() / channels as f64)
            .collect()
    };
    Ok(AudioBuffer::new(samples, spec.sample_rate))
}

/// Writes `buffer` to `path` as mono RIFF/WAVE in the requested encoding.
/// The result is always re-loadable by [`load_wav`].
pub fn save_wav(
    buffer: &AudioBuffer,
    path: &Path,
    encoding: WavEncoding,
) -> Result<(), AudioError> {
    buffer.validate()?;
    let display = path.display().to_string();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: buffer.sample_rate,
        bits_per_sample: match encoding {
            WavEncoding::Pcm16 => 16,
            WavEncoding::Float32 => 32,
        },
        sample_format: match encoding {
            WavEncoding::Pcm16 => hound::SampleFormat::Int,
            WavEncoding::Float32 => hound::SampleFormat::Float,
        },
    };
    let map_err = |e: hound::Error| match e {
        hound::Error::IoError(source) => AudioError::Unwritable {
            path: display.clone(),
            source,
        },
        other => AudioError::Unwritable {
            path: display.clone(),
            source: io::Error::other(other.to_string()),
        },
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(map_err)?;
    match encoding {
        WavEncoding::Pcm16 => {
            for &s in &buffer.samples {
                let q = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                writer.write_sample(q).map_err(map_err)?;
            }
        }
        WavEncoding::Float32 => {
            for &s in &buffer.samples {
                writer.write_sample(s as f32).map_err(map_err)?;
            }
        }
    }
    writer.finalize().map_err(map_err)?;
    Ok(())
}
