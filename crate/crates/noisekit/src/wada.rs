//! Blind SNR estimation by waveform amplitude distribution analysis.
//!
//! The method models speech amplitudes as gamma-distributed with shape 0.4
//! and noise as Gaussian. The statistic `G = ln(mean |z|) - mean(ln |z|)`
//! is scale-invariant and moves monotonically from the pure-Gaussian value
//! (~0.409) up to the pure-gamma value (~1.645) as SNR grows, so inverting
//! a precomputed SNR -> G table yields a blind estimate.
//!
//! Rather than shipping a transcribed table, [`GainTable::build`]
//! regenerates it by Monte-Carlo from a seed: per grid SNR, draw
//! gamma-amplitude speech and unit-power Gaussian noise, mix at exactly
//! that SNR, and record G. Isotonic regression then repairs any
//! Monte-Carlo noise so the table is strictly monotone and invertible.

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{load_wav, AudioBuffer, AudioError};
use crate::rng::CounterRng;

/// Gamma shape parameter of the speech amplitude model.
pub const GAMMA_SHAPE: f64 = 0.4;

/// Grid limits in dB; estimates clamp to this range.
pub const SNR_GRID_MIN_DB: f64 = -20.0;
pub const SNR_GRID_MAX_DB: f64 = 100.0;

/// Minimum number of non-zero samples for a meaningful estimate.
pub const MIN_NONZERO_SAMPLES: usize = 4096;

pub const DEFAULT_TABLE_SEED: u64 = 0x5741_4441; // "WADA"
pub const DEFAULT_SAMPLES_PER_POINT: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum WadaError {
    #[error("signal is all zeros; SNR is undefined")]
    AllZero,
    #[error("only {nonzero} non-zero samples; need at least {MIN_NONZERO_SAMPLES}")]
    InsufficientSamples { nonzero: usize },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("invalid gain table: {0}")]
    InvalidTable(String),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error("gain table i/o failed for {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("gain table JSON is malformed: {0}")]
    Json(#[from] serde_json::Error),
}

/// Precomputed SNR -> G lookup, strictly increasing in SNR.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GainTable {
    pub snr_grid_db: Vec<f64>,
    pub g_values: Vec<f64>,
    pub seed: u64,
    pub samples_per_point: u64,
}

/// One blind estimate. `clipped` is set when the raw statistic fell
/// outside the table and the result was clamped to a grid end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrEstimate {
    pub snr_db: f64,
    pub clipped: bool,
}

/// The scale-invariant gamma-deviation statistic over non-zero samples.
///
/// Amplitudes are pre-divided by the binade (power of two) of the largest
/// magnitude, extracted from the float bits. Power-of-two gains therefore
/// leave every intermediate bit-identical, and the statistic is exactly
/// scale-free in that case rather than merely analytically so.
pub fn g_statistic(samples: &[f64]) -> Option<f64> {
    let max = samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if max == 0.0 {
        return None;
    }
    let scale = if max < 1e-300 {
        1.0
    } else {
        let exp = ((max.to_bits() >> 52) & 0x7ff) as i32 - 1023;
        2.0f64.powi(exp)
    };
    let mut n = 0u64;
    let mut sum = 0.0;
    let mut sum_ln = 0.0;
    for &s in samples {
        let a = s.abs();
        if a > 0.0 {
            let u = a / scale;
            n += 1;
            sum += u;
            sum_ln += u.ln();
        }
    }
    Some((sum / n as f64).ln() - sum_ln / n as f64)
}

/// Synthetic gamma-amplitude "speech": random sign, |x| ~ Gamma(0.4, 1).
/// This is exactly the generative model behind the gain table.
pub fn synthetic_gamma_speech(rng: &mut CounterRng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let mag = rng.gamma(GAMMA_SHAPE);
            if rng.next_u64() & 1 == 0 {
                mag
            } else {
                -mag
            }
        })
        .collect()
}

fn mean_power(samples: &[f64]) -> f64 {
    samples.iter().map(|s| s * s).sum::<f64>() / samples.len() as f64
}

/// Pool-adjacent-violators: smallest non-decreasing sequence change.
fn isotonic_nondecreasing(values: &[f64]) -> Vec<f64> {
    let mut level: Vec<f64> = Vec::with_capacity(values.len());
    let mut weight: Vec<f64> = Vec::with_capacity(values.len());
    for &v in values {
        level.push(v);
        weight.push(1.0);
        while level.len() > 1 && level[level.len() - 2] > level[level.len() - 1] {
            let (v2, w2) = (level.pop().unwrap(), weight.pop().unwrap());
            let (v1, w1) = (level.pop().unwrap(), weight.pop().unwrap());
            level.push((v1 * w1 + v2 * w2) / (w1 + w2));
            weight.push(w1 + w2);
        }
    }
    let mut out = Vec::with_capacity(values.len());
    for (v, w) in level.into_iter().zip(weight) {
        for _ in 0..w as usize {
            out.push(v);
        }
    }
    out
}

impl GainTable {
    /// Monte-Carlo table construction: one point per integer dB from -20
    /// to +100, `samples_per_point` draws each, fully determined by `seed`.
    /// Grid points use independent sub-streams, so the build parallelizes
    /// without affecting the result.
    pub fn build(seed: u64, samples_per_point: u64) -> GainTable {
        let snr_grid_db: Vec<f64> = (SNR_GRID_MIN_DB as i64..=SNR_GRID_MAX_DB as i64)
            .map(|s| s as f64)
            .collect();
        let root = CounterRng::new(seed, 0);
        let raw: Vec<f64> = snr_grid_db
            .par_iter()
            .enumerate()
            .map(|(idx, &snr_db)| {
                let mut rng = root.split(idx as u64);
                let n = samples_per_point as usize;
                let speech = synthetic_gamma_speech(&mut rng, n);
                let noise: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
                let gain =
                    (mean_power(&speech) / (mean_power(&noise) * 10f64.powf(snr_db / 10.0))).sqrt();
                let mixed: Vec<f64> = speech
                    .iter()
                    .zip(&noise)
                    .map(|(s, w)| s + gain * w)
                    .collect();
                g_statistic(&mixed).expect("mixture is non-zero")
            })
            .collect();

        let mut g_values = isotonic_nondecreasing(&raw);
        // Strictness keeps interpolation invertible; the tilt is far below
        // Monte-Carlo resolution.
        for i in 1..g_values.len() {
            if g_values[i] <= g_values[i - 1] {
                g_values[i] = g_values[i - 1] + 1e-12;
            }
        }
        GainTable {
            snr_grid_db,
            g_values,
            seed,
            samples_per_point,
        }
    }

    /// Shared table built once per process with the default seed and
    /// sample count.
    pub fn default_table() -> &'static GainTable {
        static TABLE: OnceLock<GainTable> = OnceLock::new();
        TABLE.get_or_init(|| GainTable::build(DEFAULT_TABLE_SEED, DEFAULT_SAMPLES_PER_POINT))
    }

    pub fn validate(&self) -> Result<(), WadaError> {
        if self.snr_grid_db.len() != self.g_values.len() || self.snr_grid_db.len() < 2 {
            return Err(WadaError::InvalidTable("grid/value length mismatch".into()));
        }
        if self.snr_grid_db.first() != Some(&SNR_GRID_MIN_DB)
            || self.snr_grid_db.last() != Some(&SNR_GRID_MAX_DB)
        {
            return Err(WadaError::InvalidTable(format!(
                "grid must span [{SNR_GRID_MIN_DB}, {SNR_GRID_MAX_DB}] dB"
            )));
        }
        for w in self.g_values.windows(2) {
            if w[1] <= w[0] {
                return Err(WadaError::InvalidTable(
                    "g_values are not strictly increasing".into(),
                ));
            }
        }
        Ok(())
    }

    /// Inverts G to an SNR by linear interpolation, clamping to grid ends.
    pub fn invert(&self, g: f64) -> SnrEstimate {
        let n = self.g_values.len();
        if g <= self.g_values[0] {
            return SnrEstimate {
                snr_db: self.snr_grid_db[0],
                clipped: g < self.g_values[0],
            };
        }
        if g >= self.g_values[n - 1] {
            return SnrEstimate {
                snr_db: self.snr_grid_db[n - 1],
                clipped: g > self.g_values[n - 1],
            };
        }
        let hi = self.g_values.partition_point(|&v| v < g).max(1);
        let (g0, g1) = (self.g_values[hi - 1], self.g_values[hi]);
        let (s0, s1) = (self.snr_grid_db[hi - 1], self.snr_grid_db[hi]);
        SnrEstimate {
            snr_db: s0 + (s1 - s0) * (g - g0) / (g1 - g0),
            clipped: false,
        }
    }

    pub fn save_json(&self, path: &Path) -> Result<(), WadaError> {
        let json = serde_json::to_string(self)?;
        std::fs::write(path, json).map_err(|source| WadaError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load_json(path: &Path) -> Result<GainTable, WadaError> {
        let text = std::fs::read_to_string(path).map_err(|source| WadaError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let table: GainTable = serde_json::from_str(&text)?;
        table.validate()?;
        Ok(table)
    }
}

/// Blind SNR estimate over the whole buffer (exact zeros excluded).
pub fn estimate_snr(buffer: &AudioBuffer, table: &GainTable) -> Result<SnrEstimate, WadaError> {
    let nonzero = buffer.samples.iter().filter(|s| **s != 0.0).count();
    if nonzero == 0 {
        return Err(WadaError::AllZero);
    }
    if nonzero < MIN_NONZERO_SAMPLES {
        return Err(WadaError::InsufficientSamples { nonzero });
    }
    let g = g_statistic(&buffer.samples).expect("non-zero samples exist");
    Ok(table.invert(g))
}

/// Loads a WAV file and estimates its SNR.
pub fn estimate_snr_file(path: &Path, table: &GainTable) -> Result<SnrEstimate, WadaError> {
    let buffer = load_wav(path)?;
    estimate_snr(&buffer, table)
}

/// One corpus row: the file and its estimate or error message.
#[derive(Debug, Clone)]
pub struct FileEstimate {
    pub path: PathBuf,
    pub result: Result<SnrEstimate, String>,
}

/// Summary statistics over the successfully estimated files.
/// `mean`/`median`/`stddev` are null when every file errored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrSummary {
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub stddev: Option<f64>,
    pub n: usize,
    pub n_errors: usize,
}

#[derive(Debug, Clone)]
pub struct CorpusSnrReport {
    pub files: Vec<FileEstimate>,
    pub summary: SnrSummary,
}

/// Mean / median / population stddev over `values` plus an error count.
pub fn summarize(values: &[f64], n_errors: usize) -> SnrSummary {
    if values.is_empty() {
        return SnrSummary {
            mean: None,
            median: None,
            stddev: None,
            n: 0,
            n_errors,
        };
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    SnrSummary {
        mean: Some(mean),
        median: Some(median),
        stddev: Some(var.sqrt()),
        n,
        n_errors,
    }
}

/// Per-file estimates in input order plus a summary over the non-error
/// files. Per-file failures are collected, never fatal.
pub fn corpus_snr_report(
    paths: &[PathBuf],
    table: &GainTable,
) -> Result<CorpusSnrReport, WadaError> {
    if paths.is_empty() {
        return Err(WadaError::EmptyCorpus);
    }
    let files: Vec<FileEstimate> = paths
        .iter()
        .map(|path| FileEstimate {
            path: path.clone(),
            result: estimate_snr_file(path, table).map_err(|e| e.to_string()),
        })
        .collect();
    let ok_values: Vec<f64> = files
        .iter()
        .filter_map(|f| f.result.as_ref().ok().map(|e| e.snr_db))
        .collect();
    let n_errors = files.len() - ok_values.len();
    Ok(CorpusSnrReport {
        summary: summarize(&ok_values, n_errors),
        files,
    })
}
