//! Signal framing and the two feature families used throughout: 80-dim
//! mel filterbank frames and 20 bark-scale cepstral coefficients.

pub mod dct;
pub mod filterbank;

use std::io::{Read, Write};
use std::path::Path;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{AudioBuffer, AudioError};
use filterbank::Filterbank;

/// Natural-log compression floor applied to band energies.
pub const LOG_FLOOR: f64 = 1e-10;

/// Mel filter count for encoder-input features.
pub const MEL_BANDS: usize = 80;

/// Bark band / cepstral coefficient count for vocoder-style features.
pub const BARK_COEFFS: usize = 20;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("buffer of {len} samples is shorter than one window of {window} samples")]
    BufferTooShort { len: usize, window: usize },
    #[error("invalid frame geometry: {0}")]
    InvalidGeometry(String),
    #[error("buffer is {buffer} Hz but the geometry expects {geometry} Hz (no resampling here)")]
    RateMismatch { buffer: u32, geometry: u32 },
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error("feature i/o failed for {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("sidecar does not match matrix: {0}")]
    SidecarMismatch(String),
}

/// Analysis frame geometry. Defaults to 24 kHz, 1024-sample window,
/// 256-sample hop, 1024-point FFT.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameGeometry {
    pub window_length: usize,
    pub hop_length: usize,
    pub fft_size: usize,
    pub sample_rate: u32,
}

impl Default for FrameGeometry {
    fn default() -> Self {
        FrameGeometry {
            window_length: 1024,
            hop_length: 256,
            fft_size: 1024,
            sample_rate: 24000,
        }
    }
}

impl FrameGeometry {
    pub fn validate(&self) -> Result<(), SpectralError> {
        if self.hop_length == 0
            || self.hop_length > self.window_length
            || self.window_length > self.fft_size
        {
            return Err(SpectralError::InvalidGeometry(format!(
                "need 0 < hop ({}) <= window ({}) <= fft ({})",
                self.hop_length, self.window_length, self.fft_size
            )));
        }
        if self.sample_rate == 0 {
            return Err(SpectralError::InvalidGeometry("sample_rate is 0".into()));
        }
        Ok(())
    }

    /// Frame count for a signal of `len` samples: `1 + (len - window) / hop`.
    pub fn frame_count(&self, len: usize) -> Result<usize, SpectralError> {
        if len < self.window_length {
            return Err(SpectralError::BufferTooShort {
                len,
                window: self.window_length,
            });
        }
        Ok(1 + (len - self.window_length) / self.hop_length)
    }

    pub fn n_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Same framing at a different sample rate.
    pub fn with_sample_rate(&self, sample_rate: u32) -> FrameGeometry {
        FrameGeometry {
            sample_rate,
            ..*self
        }
    }

    fn check_rate(&self, buffer: &AudioBuffer) -> Result<(), SpectralError> {
        if buffer.sample_rate != self.sample_rate {
            return Err(SpectralError::RateMismatch {
                buffer: buffer.sample_rate,
                geometry: self.sample_rate,
            });
        }
        Ok(())
    }
}

/// What a [`FeatureSequence`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureKind {
    #[serde(rename = "mel_80")]
    Mel80,
    #[serde(rename = "bark_cepstra_20")]
    BarkCepstra20,
}

impl FeatureKind {
    pub fn dim(self) -> usize {
        match self {
            FeatureKind::Mel80 => MEL_BANDS,
            FeatureKind::BarkCepstra20 => BARK_COEFFS,
        }
    }
}

/// A frame-major T x D feature matrix plus the geometry that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    pub kind: FeatureKind,
    pub geometry: FrameGeometry,
    t: usize,
    d: usize,
    data: Vec<f64>,
}

impl FeatureSequence {
    pub fn from_rows(
        kind: FeatureKind,
        geometry: FrameGeometry,
        rows: Vec<Vec<f64>>,
    ) -> FeatureSequence {
        let t = rows.len();
        let d = rows.first().map_or(kind.dim(), Vec::len);
        let mut data = Vec::with_capacity(t * d);
        for row in rows {
            assert_eq!(row.len(), d, "ragged feature rows");
            data.extend(row);
        }
        FeatureSequence {
            kind,
            geometry,
            t,
            d,
            data,
        }
    }

    pub fn n_frames(&self) -> usize {
        self.t
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        &self.data[t * self.d..(t + 1) * self.d]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.d)
    }

    /// Drops frames past `t`, for aligning two sequences to a common length.
    pub fn truncate(&mut self, t: usize) {
        if t < self.t {
            self.t = t;
            self.data.truncate(t * self.d);
        }
    }
}

/// Sidecar metadata written next to every raw feature dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSidecar {
    pub kind: FeatureKind,
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "D")]
    pub d: usize,
    pub window: usize,
    pub hop: usize,
    pub fft: usize,
    pub sample_rate: u32,
}

impl FeatureSequence {
    /// Writes the matrix as little-endian float32, row-major, plus a JSON
    /// sidecar describing shape and geometry.
    pub fn save(&self, matrix_path: &Path, sidecar_path: &Path) -> Result<(), SpectralError> {
        let io_err = |path: &Path| {
            let path = path.display().to_string();
            move |source: std::io::Error| SpectralError::Io { path, source }
        };
        let mut bytes = Vec::with_capacity(self.data.len() * 4);
        for &v in &self.data {
            bytes.extend_from_slice(&(v as f32).to_le_bytes());
        }
        let mut f = std::fs::File::create(matrix_path).map_err(io_err(matrix_path))?;
        f.write_all(&bytes).map_err(io_err(matrix_path))?;

        let sidecar = FeatureSidecar {
            kind: self.kind,
            t: self.t,
            d: self.d,
            window: self.geometry.window_length,
            hop: self.geometry.hop_length,
            fft: self.geometry.fft_size,
            sample_rate: self.geometry.sample_rate,
        };
        let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
        std::fs::write(sidecar_path, json + "\n").map_err(io_err(sidecar_path))?;
        Ok(())
    }

    /// Reads a dump written by [`FeatureSequence::save`]. Values come back
    /// as the float32 stored on disk, widened to f64.
    pub fn load(matrix_path: &Path, sidecar_path: &Path) -> Result<FeatureSequence, SpectralError> {
        let io_err = |path: &Path| {
            let path = path.display().to_string();
            move |source: std::io::Error| SpectralError::Io { path, source }
        };
        let sidecar_text = std::fs::read_to_string(sidecar_path).map_err(io_err(sidecar_path))?;
        let sidecar: FeatureSidecar = serde_json::from_str(&sidecar_text)
            .map_err(|e| SpectralError::SidecarMismatch(e.to_string()))?;
        let mut bytes = Vec::new();
        std::fs::File::open(matrix_path)
            .map_err(io_err(matrix_path))?
            .read_to_end(&mut bytes)
            .map_err(io_err(matrix_path))?;
        if bytes.len() != sidecar.t * sidecar.d * 4 {
            return Err(SpectralError::SidecarMismatch(format!(
                "matrix has {} bytes, sidecar implies {}",
                bytes.len(),
                sidecar.t * sidecar.d * 4
            )));
        }
        let data = bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
            .collect();
        Ok(FeatureSequence {
            kind: sidecar.kind,
            geometry: FrameGeometry {
                window_length: sidecar.window,
                hop_length: sidecar.hop,
                fft_size: sidecar.fft,
                sample_rate: sidecar.sample_rate,
            },
            t: sidecar.t,
            d: sidecar.d,
            data,
        })
    }
}

/// Symmetric (non-periodic) Hann window of length `n`.
pub fn hann_window(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos()))
        .collect()
}

/// Hann-windowed one-sided power spectrogram: T x (fft/2 + 1), entries
/// `|X_k|^2` of the unnormalized DFT.
pub fn stft_power(
    buffer: &AudioBuffer,
    geometry: &FrameGeometry,
) -> Result<Vec<Vec<f64>>, SpectralError> {
    geometry.validate()?;
    geometry.check_rate(buffer)?;
    buffer.validate()?;
    let n_frames = geometry.frame_count(buffer.len())?;
    let window = hann_window(geometry.window_length);
    let n_bins = geometry.n_bins();

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(geometry.fft_size);
    let mut frames = Vec::with_capacity(n_frames);
    let mut scratch = vec![Complex::new(0.0, 0.0); geometry.fft_size];
    for t in 0..n_frames {
        let start = t * geometry.hop_length;
        scratch.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
        for (i, w) in window.iter().enumerate() {
            scratch[i].re = buffer.samples[start + i] * w;
        }
        fft.process(&mut scratch);
        frames.push(scratch[..n_bins].iter().map(|c| c.norm_sqr()).collect());
    }
    Ok(frames)
}

fn log_band_energies(power: &[f64], bank: &Filterbank) -> Vec<f64> {
    bank.apply(power)
        .into_iter()
        .map(|e| e.max(LOG_FLOOR).ln())
        .collect()
}

/// 80-dim log mel filterbank features (HTK mel scale, natural log with a
/// 1e-10 floor).
pub fn mel_features(
    buffer: &AudioBuffer,
    geometry: &FrameGeometry,
) -> Result<FeatureSequence, SpectralError> {
    let power = stft_power(buffer, geometry)?;
    let bank = Filterbank::mel(MEL_BANDS, geometry.fft_size, geometry.sample_rate);
    let rows = power
        .iter()
        .map(|frame| log_band_energies(frame, &bank))
        .collect();
    Ok(FeatureSequence::from_rows(
        FeatureKind::Mel80,
        *geometry,
        rows,
    ))
}

/// 20 bark-scale cepstral coefficients: Traunmueller-bark triangular bands,
/// natural-log energies, orthonormal DCT-II.
pub fn bark_cepstra(
    buffer: &AudioBuffer,
    geometry: &FrameGeometry,
) -> Result<FeatureSequence, SpectralError> {
    let power = stft_power(buffer, geometry)?;
    let bank = Filterbank::bark(BARK_COEFFS, geometry.fft_size, geometry.sample_rate);
    let rows = power
        .iter()
        .map(|frame| dct::dct_ii_orthonormal(&log_band_energies(frame, &bank)))
        .collect();
    Ok(FeatureSequence::from_rows(
        FeatureKind::BarkCepstra20,
        *geometry,
        rows,
    ))
}
