//! Mixing background noise into speech at a controlled SNR.
//!
//! Noise is scaled so that the realized SNR (speech region power over
//! scaled-noise power) hits the target exactly, then added only within the
//! requested region: the whole utterance, its second half, or an arbitrary
//! interval. The output is never renormalized; clipping is flagged in the
//! record instead of silently fixed, which keeps the realized SNR exact.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::audio::{AudioBuffer, AudioError};
use crate::rng::CounterRng;

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("sample rate mismatch: speech {speech} Hz vs noise {noise} Hz")]
    RateMismatch { speech: u32, noise: u32 },
    #[error("speech region is silent; SNR is undefined")]
    SilentSpeechRegion,
    #[error("noise is too short: region needs {needed} samples, noise has {available} (wraparound disabled)")]
    NoiseTooShort { needed: usize, available: usize },
    #[error("invalid region: {0}")]
    InvalidRegion(String),
    #[error("speech and noise lists must be non-empty")]
    EmptyInputs,
    #[error("invalid SNR range: low {low} > high {high}")]
    InvalidSnrRange { low: f64, high: f64 },
    #[error(transparent)]
    Audio(#[from] AudioError),
}

/// Where noise goes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    Full,
    SecondHalf,
    Interval { start_s: f64, end_s: f64 },
}

impl Region {
    /// Resolves to a sample range over a signal of `len` samples.
    pub fn resolve(
        &self,
        len: usize,
        sample_rate: u32,
    ) -> Result<std::ops::Range<usize>, AugmentError> {
        match *self {
            Region::Full => Ok(0..len),
            Region::SecondHalf => Ok(len / 2..len),
            Region::Interval { start_s, end_s } => {
                if !(start_s.is_finite() && end_s.is_finite()) || start_s < 0.0 || start_s >= end_s
                {
                    return Err(AugmentError::InvalidRegion(format!(
                        "interval {start_s}..{end_s} s must satisfy 0 <= start < end"
                    )));
                }
                let start = (start_s * sample_rate as f64).round() as usize;
                let end = (end_s * sample_rate as f64).round() as usize;
                if end > len {
                    return Err(AugmentError::InvalidRegion(format!(
                        "interval end {end_s} s is past the {len}-sample utterance"
                    )));
                }
                if start >= end {
                    return Err(AugmentError::InvalidRegion(format!(
                        "interval {start_s}..{end_s} s resolves to an empty sample range"
                    )));
                }
                Ok(start..end)
            }
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::Full => write!(f, "full"),
            Region::SecondHalf => write!(f, "second_half"),
            Region::Interval { start_s, end_s } => write!(f, "interval:{start_s}-{end_s}"),
        }
    }
}

impl FromStr for Region {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(Region::Full),
            "second_half" => Ok(Region::SecondHalf),
            other => {
                let body = other
                    .strip_prefix("interval:")
                    .ok_or_else(|| format!("unknown region {other:?}"))?;
                let (a, b) = body.split_once('-').ok_or_else(|| {
                    format!("interval must look like interval:START-END, got {other:?}")
                })?;
                let start_s: f64 = a.parse().map_err(|e| format!("bad interval start: {e}"))?;
                let end_s: f64 = b.parse().map_err(|e| format!("bad interval end: {e}"))?;
                Ok(Region::Interval { start_s, end_s })
            }
        }
    }
}

impl Serialize for Region {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Region {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// How the starting offset into the noise file is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseOffsetPolicy {
    Random { seed: u64 },
    Fixed { offset: usize },
}

/// Which speech power the target SNR is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnrReference {
    /// Mean power of the speech samples inside the noised region.
    RegionPower,
    /// Mean power over energy-active stretches only (20 ms windows within
    /// 40 dB of the peak window RMS), so long pauses do not deflate the
    /// reference.
    ActivePower,
}

/// Everything that defines one mixing operation.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentationSpec {
    pub target_snr_db: f64,
    pub region: Region,
    pub noise_offset_policy: NoiseOffsetPolicy,
    pub snr_reference: SnrReference,
    /// Allow reading the noise segment modulo the noise length.
    pub allow_wrap: bool,
}

impl AugmentationSpec {
    pub fn new(target_snr_db: f64, region: Region) -> AugmentationSpec {
        AugmentationSpec {
            target_snr_db,
            region,
            noise_offset_policy: NoiseOffsetPolicy::Fixed { offset: 0 },
            snr_reference: SnrReference::RegionPower,
            allow_wrap: false,
        }
    }
}

/// Measured results of one mix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixOutcome {
    /// SNR recomputed from the actually-added noise, in dB. Infinite when
    /// the noise segment was silent (output equals the speech).
    pub realized_snr_db: f64,
    pub noise_offset: usize,
    pub noise_gain: f64,
    /// Any output sample left [-1, 1].
    pub clipped: bool,
}

/// Provenance of one mixing operation; serializes to one manifest line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationRecord {
    pub speech_path: String,
    pub noise_path: String,
    pub target_snr_db: f64,
    pub realized_snr_db: Option<f64>,
    pub region: Region,
    pub noise_offset: u64,
    pub seed: u64,
    pub output_path: String,
    pub clipped: bool,
}

/// Mean power over energy-active 20 ms windows of `samples` (windows whose
/// RMS is within 40 dB of the loudest window).
fn active_power(samples: &[f64], sample_rate: u32) -> f64 {
    let win = (sample_rate as usize / 50).max(1);
    let n_windows = samples.len().div_ceil(win);
    let window_power: Vec<f64> = (0..n_windows)
        .map(|w| {
            let chunk = &samples[w * win..((w + 1) * win).min(samples.len())];
            chunk.iter().map(|s| s * s).sum::<f64>() / chunk.len() as f64
        })
        .collect();
    let peak_rms = window_power.iter().fold(0.0f64, |m, &p| m.max(p)).sqrt();
    let threshold = peak_rms * 10f64.powf(-40.0 / 20.0);
    let mut acc = 0.0;
    let mut count = 0usize;
    for (w, &p) in window_power.iter().enumerate() {
        if p.sqrt() >= threshold && peak_rms > 0.0 {
            let chunk_len = ((w + 1) * win).min(samples.len()) - w * win;
            acc += p * chunk_len as f64;
            count += chunk_len;
        }
    }
    if count == 0 {
        0.0
    } else {
        acc / count as f64
    }
}

/// Adds a scaled noise segment to `speech` inside `spec.region` so the
/// realized SNR equals the target. Samples outside the region are copied
/// untouched; nothing is renormalized afterwards.
pub fn mix_at_snr(
    speech: &AudioBuffer,
    noise: &AudioBuffer,
    spec: &AugmentationSpec,
) -> Result<(AudioBuffer, MixOutcome), AugmentError> {
    speech.validate()?;
    noise.validate()?;
    if speech.sample_rate != noise.sample_rate {
        return Err(AugmentError::RateMismatch {
            speech: speech.sample_rate,
            noise: noise.sample_rate,
        });
    }
    let region = spec.region.resolve(speech.len(), speech.sample_rate)?;
    let region_len = region.len();

    let noise_offset = match spec.noise_offset_policy {
        NoiseOffsetPolicy::Fixed { offset } => offset,
        NoiseOffsetPolicy::Random { seed } => {
            let mut rng = CounterRng::new(seed, 0);
            if spec.allow_wrap {
                rng.below(noise.len() as u64) as usize
            } else if noise.len() >= region_len {
                rng.below((noise.len() - region_len + 1) as u64) as usize
            } else {
                return Err(AugmentError::NoiseTooShort {
                    needed: region_len,
                    available: noise.len(),
                });
            }
        }
    };
    if !spec.allow_wrap && noise_offset + region_len > noise.len() {
        return Err(AugmentError::NoiseTooShort {
            needed: noise_offset + region_len,
            available: noise.len(),
        });
    }
    let noise_segment: Vec<f64> = (0..region_len)
        .map(|i| noise.samples[(noise_offset + i) % noise.len()])
        .collect();

    let region_speech = &speech.samples[region.clone()];
    let speech_region_power = region_speech.iter().map(|s| s * s).sum::<f64>() / region_len as f64;
    let reference_power = match spec.snr_reference {
        SnrReference::RegionPower => speech_region_power,
        SnrReference::ActivePower => active_power(region_speech, speech.sample_rate),
    };
    if reference_power <= 0.0 {
        return Err(AugmentError::SilentSpeechRegion);
    }

    let noise_power = noise_segment.iter().map(|s| s * s).sum::<f64>() / region_len as f64;
    let mut output = speech.samples.clone();
    let (gain, realized_snr_db) = if noise_power > 0.0 {
        let gain = (reference_power / (noise_power * 10f64.powf(spec.target_snr_db / 10.0))).sqrt();
        let mut scaled_power = 0.0;
        for (i, &n) in noise_segment.iter().enumerate() {
            let scaled = gain * n;
            output[region.start + i] += scaled;
            scaled_power += scaled * scaled;
        }
        scaled_power /= region_len as f64;
        (gain, 10.0 * (speech_region_power / scaled_power).log10())
    } else {
        // All-zero noise: the mix is the identity on speech.
        (0.0, f64::INFINITY)
    };
    let clipped = output[region.clone()].iter().any(|s| s.abs() > 1.0);

    Ok((
        AudioBuffer::new(output, speech.sample_rate),
        MixOutcome {
            realized_snr_db,
            noise_offset,
            noise_gain: gain,
            clipped,
        },
    ))
}

/// One planned (not yet executed) mixing operation from
/// [`sample_augmentation`].
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedAugmentation {
    pub speech_index: usize,
    pub noise_index: usize,
    pub spec: AugmentationSpec,
}

/// Draws one augmentation plan per speech file: SNR uniform in
/// `snr_range_db`, noise file and offset uniform, all deterministic under
/// `seed` (each speech file gets an independent sub-stream, so the plan
/// does not depend on evaluation order).
pub fn sample_augmentation(
    n_speech: usize,
    n_noise: usize,
    snr_range_db: (f64, f64),
    seed: u64,
) -> Result<Vec<PlannedAugmentation>, AugmentError> {
    if n_speech == 0 || n_noise == 0 {
        return Err(AugmentError::EmptyInputs);
    }
    let (low, high) = snr_range_db;
    if low > high || !low.is_finite() || !high.is_finite() {
        return Err(AugmentError::InvalidSnrRange { low, high });
    }
    let root = CounterRng::new(seed, 0);
    Ok((0..n_speech)
        .map(|i| {
            let mut rng = root.split(i as u64);
            let target_snr_db = rng.range_f64(low, high);
            let noise_index = rng.below(n_noise as u64) as usize;
            let offset_seed = rng.next_u64();
            PlannedAugmentation {
                speech_index: i,
                noise_index,
                spec: AugmentationSpec {
                    target_snr_db,
                    region: Region::Full,
                    noise_offset_policy: NoiseOffsetPolicy::Random { seed: offset_seed },
                    snr_reference: SnrReference::RegionPower,
                    allow_wrap: false,
                },
            }
        })
        .collect())
}
