//! Per-frame fundamental-frequency estimation with voicing decisions and
//! pitch correlation.
//!
//! The tracker is a time-domain normalized cross-correlation (NCC) search:
//! per frame, correlate the windowed signal against itself at every lag in
//! the configured f0 range, refine the best lag with parabolic
//! interpolation, and call the frame voiced when the peak correlation and
//! the frame energy both clear their thresholds. NCC is scale-invariant,
//! so gain changes do not move f0 or voicing decisions.

use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::audio::AudioBuffer;
use crate::spectral::FrameGeometry;

#[derive(Debug, Error)]
pub enum PitchError {
    #[error("invalid pitch config: {0}")]
    InvalidConfig(String),
    #[error("config does not fit geometry: {0}")]
    GeometryMismatch(String),
    #[error(transparent)]
    Spectral(#[from] crate::spectral::SpectralError),
    #[error("pitch i/o failed for {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Tracker parameters. Defaults cover the standard speech range.
#[derive(Debug, Clone, Copy)]
pub struct PitchConfig {
    pub f0_min_hz: f64,
    pub f0_max_hz: f64,
    /// Minimum peak NCC for a frame to be voiced.
    pub voicing_threshold: f64,
    /// Frame RMS floor, in dB relative to full scale.
    pub silence_threshold_db: f64,
    /// 3-point median filter on f0, suppressing isolated octave errors.
    pub median_filter: bool,
}

impl Default for PitchConfig {
    fn default() -> Self {
        PitchConfig {
            f0_min_hz: 50.0,
            f0_max_hz: 500.0,
            voicing_threshold: 0.3,
            silence_threshold_db: -60.0,
            median_filter: true,
        }
    }
}

/// Per-frame pitch estimates: f0 in Hz (0 when unvoiced), the voicing
/// decision, and the peak normalized correlation.
#[derive(Debug, Clone, PartialEq)]
pub struct PitchTrack {
    pub f0_hz: Vec<f64>,
    pub voiced: Vec<bool>,
    pub correlation: Vec<f64>,
    pub geometry: FrameGeometry,
}

impl PitchTrack {
    pub fn n_frames(&self) -> usize {
        self.f0_hz.len()
    }

    pub fn truncate(&mut self, n: usize) {
        if n < self.f0_hz.len() {
            self.f0_hz.truncate(n);
            self.voiced.truncate(n);
            self.correlation.truncate(n);
        }
    }

    /// CSV dump: `frame_index,f0_hz,voiced,correlation`.
    pub fn write_csv(&self, path: &Path) -> Result<(), PitchError> {
        let io_err = |source: std::io::Error| PitchError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
        writeln!(out, "frame_index,f0_hz,voiced,correlation").map_err(io_err)?;
        for t in 0..self.n_frames() {
            writeln!(
                out,
                "{},{},{},{}",
                t, self.f0_hz[t], self.voiced[t], self.correlation[t]
            )
            .map_err(io_err)?;
        }
        out.flush().map_err(io_err)
    }
}

/// Lags within `NCC_TIE_EPSILON` of the peak NCC count as tied; the
/// smallest (highest f0) wins, which is what keeps exact-period multiples
/// from producing octave-down errors.
const NCC_TIE_EPSILON: f64 = 1e-6;

/// Tracks pitch over `buffer` using `geometry`'s framing.
pub fn track_pitch(
    buffer: &AudioBuffer,
    geometry: &FrameGeometry,
    config: &PitchConfig,
) -> Result<PitchTrack, PitchError> {
    geometry.validate()?;
    buffer
        .validate()
        .map_err(crate::spectral::SpectralError::from)?;
    if buffer.sample_rate != geometry.sample_rate {
        return Err(PitchError::GeometryMismatch(format!(
            "buffer is {} Hz but the geometry expects {} Hz",
            buffer.sample_rate, geometry.sample_rate
        )));
    }
    if !(0.0 < config.f0_min_hz && config.f0_min_hz < config.f0_max_hz) {
        return Err(PitchError::InvalidConfig(format!(
            "need 0 < f0_min ({}) < f0_max ({})",
            config.f0_min_hz, config.f0_max_hz
        )));
    }
    let rate = geometry.sample_rate as f64;
    if rate < 2.0 * config.f0_max_hz {
        return Err(PitchError::GeometryMismatch(format!(
            "sample rate {rate} Hz cannot represent f0_max {} Hz",
            config.f0_max_hz
        )));
    }
    let lag_min = (rate / config.f0_max_hz).ceil() as usize;
    let lag_max = (rate / config.f0_min_hz).floor() as usize;
    if lag_max + 2 > geometry.window_length {
        return Err(PitchError::GeometryMismatch(format!(
            "window of {} samples is too short for f0_min {} Hz (needs > {} samples)",
            geometry.window_length,
            config.f0_min_hz,
            lag_max + 2
        )));
    }
    let n_frames = geometry.frame_count(buffer.len())?;
    let silence_rms = 10f64.powf(config.silence_threshold_db / 20.0);

    // Prefix sums of x^2 make per-lag energies O(1).
    let mut sq_prefix = Vec::with_capacity(buffer.len() + 1);
    sq_prefix.push(0.0);
    let mut acc = 0.0;
    for &s in &buffer.samples {
        acc += s * s;
        sq_prefix.push(acc);
    }
    let energy = |a: usize, b: usize| sq_prefix[b] - sq_prefix[a];

    let window = geometry.window_length;
    let mut f0 = vec![0.0; n_frames];
    let mut voiced = vec![false; n_frames];
    let mut correlation = vec![0.0; n_frames];

    for t in 0..n_frames {
        let start = t * geometry.hop_length;
        let frame_energy = energy(start, start + window);
        let rms = (frame_energy / window as f64).sqrt();
        if rms < silence_rms {
            continue; // silent frame: unvoiced, f0 = 0, correlation = 0
        }

        let mut ncc = vec![0.0; lag_max + 1];
        let mut best_ncc = f64::NEG_INFINITY;
        for (lag, slot) in ncc.iter_mut().enumerate().skip(lag_min) {
            let overlap = window - lag;
            let mut dot = 0.0;
            for i in start..start + overlap {
                dot += buffer.samples[i] * buffer.samples[i + lag];
            }
            let e0 = energy(start, start + overlap);
            let e1 = energy(start + lag, start + window);
            let denom = (e0 * e1).sqrt();
            let v = if denom > 0.0 { dot / denom } else { 0.0 };
            *slot = v;
            if v > best_ncc {
                best_ncc = v;
            }
        }

        // Smallest lag within the tie window of the peak.
        let best_lag = (lag_min..=lag_max)
            .find(|&lag| ncc[lag] >= best_ncc - NCC_TIE_EPSILON)
            .expect("peak exists");
        let peak = ncc[best_lag];
        correlation[t] = peak;
        if peak < config.voicing_threshold {
            continue; // aperiodic frame: unvoiced, f0 stays 0
        }

        let refined = if best_lag > lag_min && best_lag < lag_max {
            let (ym, y0, yp) = (ncc[best_lag - 1], ncc[best_lag], ncc[best_lag + 1]);
            let denom = ym - 2.0 * y0 + yp;
            let delta = if denom.abs() > 1e-12 {
                (0.5 * (ym - yp) / denom).clamp(-0.5, 0.5)
            } else {
                0.0
            };
            best_lag as f64 + delta
        } else {
            best_lag as f64
        };
        f0[t] = (rate / refined).clamp(config.f0_min_hz, config.f0_max_hz);
        voiced[t] = true;
    }

    if config.median_filter && n_frames >= 3 {
        let raw = f0.clone();
        for t in 1..n_frames - 1 {
            if !voiced[t] {
                continue;
            }
            let mut tri = [raw[t - 1], raw[t], raw[t + 1]];
            tri.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let med = tri[1];
            // Only accept the median when it is a plausible f0, so voiced
            // frames never end up with f0 = 0 at voicing boundaries.
            if med >= config.f0_min_hz && med <= config.f0_max_hz {
                f0[t] = med;
            }
        }
    }

    Ok(PitchTrack {
        f0_hz: f0,
        voiced,
        correlation,
        geometry: *geometry,
    })
}
