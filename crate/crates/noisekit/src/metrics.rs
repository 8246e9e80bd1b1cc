//! Reconstruction metrics: mel-cepstral distortion with optional DTW
//! alignment, and the pitch-error suite (GPE, VDE, FFE).
//!
//! MCD excludes coefficient 0, so pure gain changes (which only move c0
//! of an orthonormal-DCT cepstrum) score exactly zero. Pitch metrics are
//! index-aligned on purpose: DTW on pitch would conflate alignment error
//! with pitch error.

use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::audio::{load_wav, AudioError};
use crate::pitch::{track_pitch, PitchConfig, PitchError, PitchTrack};
use crate::spectral::{bark_cepstra, FeatureSequence, FrameGeometry, SpectralError};

/// `10 / ln 10`, the dB conversion constant in the MCD formula.
const MCD_DB_SCALE: f64 = 10.0 / std::f64::consts::LN_10;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("feature sequences are empty")]
    EmptySequence,
    #[error("feature kind mismatch: {0:?} vs {1:?}")]
    KindMismatch(crate::spectral::FeatureKind, crate::spectral::FeatureKind),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("frame count mismatch: {0} vs {1} (align with DTW or truncate first)")]
    LengthMismatch(usize, usize),
    #[error("sample rate mismatch: {0} Hz vs {1} Hz")]
    RateMismatch(u32, u32),
    #[error("gross-pitch threshold must be positive, got {0}")]
    InvalidThreshold(f64),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Pitch(#[from] PitchError),
}

/// Frame alignment for [`mcd`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alignment {
    /// Index-aligned; frame counts must match.
    None,
    /// Dynamic time warping with steps (1,0), (0,1), (1,1) and
    /// path-length normalization.
    Dtw,
}

/// Pitch-track comparison counts and rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PitchMetrics {
    pub gpe: f64,
    pub vde: f64,
    pub ffe: f64,
    pub n_frames: usize,
    pub n_both_voiced: usize,
    pub n_voicing_errors: usize,
    pub n_gross_pitch_errors: usize,
}

/// Full report for one reference/candidate pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricReport {
    pub gpe: f64,
    pub vde: f64,
    pub ffe: f64,
    pub mcd_db: f64,
    pub n_frames: usize,
    pub n_both_voiced: usize,
    pub n_voicing_errors: usize,
    pub n_gross_pitch_errors: usize,
}

impl MetricReport {
    pub fn from_parts(mcd_db: f64, pitch: PitchMetrics) -> MetricReport {
        MetricReport {
            gpe: pitch.gpe,
            vde: pitch.vde,
            ffe: pitch.ffe,
            mcd_db,
            n_frames: pitch.n_frames,
            n_both_voiced: pitch.n_both_voiced,
            n_voicing_errors: pitch.n_voicing_errors,
            n_gross_pitch_errors: pitch.n_gross_pitch_errors,
        }
    }
}

/// Euclidean distance over coefficients 1..D-1 (c0 excluded).
fn cepstral_distance(a: &[f64], b: &[f64]) -> f64 {
    a[1..]
        .iter()
        .zip(&b[1..])
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn check_compatible(
    reference: &FeatureSequence,
    candidate: &FeatureSequence,
) -> Result<(), MetricsError> {
    if reference.n_frames() == 0 || candidate.n_frames() == 0 {
        return Err(MetricsError::EmptySequence);
    }
    if reference.kind != candidate.kind {
        return Err(MetricsError::KindMismatch(reference.kind, candidate.kind));
    }
    if reference.dim() != candidate.dim() {
        return Err(MetricsError::DimensionMismatch(
            reference.dim(),
            candidate.dim(),
        ));
    }
    Ok(())
}

/// Mel-cepstral distortion in dB: the mean over aligned frame pairs of
/// `(10 / ln 10) * sqrt(2 * sum_{d>=1} (c_d - c'_d)^2)`.
///
/// DTW minimizes the summed distance (ties broken toward shorter paths)
/// and divides by the path length.
pub fn mcd(
    reference: &FeatureSequence,
    candidate: &FeatureSequence,
    align: Alignment,
) -> Result<f64, MetricsError> {
    check_compatible(reference, candidate)?;
    match align {
        Alignment::None => {
            if reference.n_frames() != candidate.n_frames() {
                return Err(MetricsError::LengthMismatch(
                    reference.n_frames(),
                    candidate.n_frames(),
                ));
            }
            let total: f64 = reference
                .frames()
                .zip(candidate.frames())
                .map(|(a, b)| cepstral_distance(a, b))
                .sum();
            Ok(MCD_DB_SCALE * 2f64.sqrt() * total / reference.n_frames() as f64)
        }
        Alignment::Dtw => {
            let (sum, len) = dtw_path_cost(reference, candidate);
            Ok(MCD_DB_SCALE * 2f64.sqrt() * sum / len as f64)
        }
    }
}

/// DP over the full cost matrix; each cell stores the best (sum, length)
/// reaching it, compared lexicographically.
fn dtw_path_cost(reference: &FeatureSequence, candidate: &FeatureSequence) -> (f64, usize) {
    let m = reference.n_frames();
    let n = candidate.n_frames();
    let mut sum = vec![f64::INFINITY; m * n];
    let mut len = vec![0usize; m * n];
    for i in 0..m {
        let row = reference.frame(i);
        for j in 0..n {
            let d = cepstral_distance(row, candidate.frame(j));
            let idx = i * n + j;
            if i == 0 && j == 0 {
                sum[idx] = d;
                len[idx] = 1;
                continue;
            }
            let mut best_sum = f64::INFINITY;
            let mut best_len = 0usize;
            let mut consider = |s: f64, l: usize| {
                if s < best_sum || (s == best_sum && l < best_len) {
                    best_sum = s;
                    best_len = l;
                }
            };
            if i > 0 {
                consider(sum[(i - 1) * n + j], len[(i - 1) * n + j]);
            }
            if j > 0 {
                consider(sum[i * n + j - 1], len[i * n + j - 1]);
            }
            if i > 0 && j > 0 {
                consider(sum[(i - 1) * n + j - 1], len[(i - 1) * n + j - 1]);
            }
            sum[idx] = best_sum + d;
            len[idx] = best_len + 1;
        }
    }
    (sum[m * n - 1], len[m * n - 1])
}

/// Gross pitch error, voicing decision error, and F0 frame error over two
/// index-aligned tracks of equal length.
///
/// - VDE: fraction of frames whose voicing decisions disagree.
/// - GPE: fraction of both-voiced frames whose f0 deviates from the
///   reference by more than `gross_threshold` (relative); 0 when no frame
///   is both-voiced.
/// - FFE: (voicing mismatches + gross pitch errors) / N. A frame counts
///   once: gross-pitch frames are both-voiced by definition, so the two
///   categories cannot overlap.
pub fn pitch_metrics(
    reference: &PitchTrack,
    candidate: &PitchTrack,
    gross_threshold: f64,
) -> Result<PitchMetrics, MetricsError> {
    if reference.n_frames() != candidate.n_frames() {
        return Err(MetricsError::LengthMismatch(
            reference.n_frames(),
            candidate.n_frames(),
        ));
    }
    if gross_threshold.is_nan() || gross_threshold <= 0.0 {
        return Err(MetricsError::InvalidThreshold(gross_threshold));
    }
    let n = reference.n_frames();
    if n == 0 {
        return Err(MetricsError::EmptySequence);
    }
    let mut n_voicing_errors = 0usize;
    let mut n_both_voiced = 0usize;
    let mut n_gross = 0usize;
    for t in 0..n {
        match (reference.voiced[t], candidate.voiced[t]) {
            (true, true) => {
                n_both_voiced += 1;
                if (candidate.f0_hz[t] - reference.f0_hz[t]).abs()
                    > gross_threshold * reference.f0_hz[t]
                {
                    n_gross += 1;
                }
            }
            (a, b) if a != b => n_voicing_errors += 1,
            _ => {}
        }
    }
    Ok(PitchMetrics {
        gpe: if n_both_voiced == 0 {
            0.0
        } else {
            n_gross as f64 / n_both_voiced as f64
        },
        vde: n_voicing_errors as f64 / n as f64,
        ffe: (n_voicing_errors + n_gross) as f64 / n as f64,
        n_frames: n,
        n_both_voiced,
        n_voicing_errors,
        n_gross_pitch_errors: n_gross,
    })
}

/// Default relative deviation above which a pitch error is "gross".
pub const DEFAULT_GROSS_THRESHOLD: f64 = 0.2;

/// Extracts bark cepstra and pitch tracks from two in-memory buffers and
/// reports MCD (DTW-aligned) plus pitch metrics over the common frame
/// count.
pub fn evaluate_buffers(
    reference: &crate::audio::AudioBuffer,
    candidate: &crate::audio::AudioBuffer,
    geometry: &FrameGeometry,
    pitch_config: &PitchConfig,
) -> Result<MetricReport, MetricsError> {
    if reference.sample_rate != candidate.sample_rate {
        return Err(MetricsError::RateMismatch(
            reference.sample_rate,
            candidate.sample_rate,
        ));
    }
    let ref_cepstra = bark_cepstra(reference, geometry)?;
    let cand_cepstra = bark_cepstra(candidate, geometry)?;
    let mcd_db = mcd(&ref_cepstra, &cand_cepstra, Alignment::Dtw)?;

    let mut ref_track = track_pitch(reference, geometry, pitch_config)?;
    let mut cand_track = track_pitch(candidate, geometry, pitch_config)?;
    let common = ref_track.n_frames().min(cand_track.n_frames());
    ref_track.truncate(common);
    cand_track.truncate(common);
    let pitch = pitch_metrics(&ref_track, &cand_track, DEFAULT_GROSS_THRESHOLD)?;

    Ok(MetricReport::from_parts(mcd_db, pitch))
}

/// [`evaluate_buffers`] over two WAV files.
pub fn evaluate_pair(
    ref_path: &Path,
    cand_path: &Path,
    geometry: &FrameGeometry,
    pitch_config: &PitchConfig,
) -> Result<MetricReport, MetricsError> {
    let reference = load_wav(ref_path)?;
    let candidate = load_wav(cand_path)?;
    evaluate_buffers(&reference, &candidate, geometry, pitch_config)
}

/// Reference implementations used to validate the fast paths. They live
/// here (not in test code) so the CLI self-test and the acceptance suite
/// can both run them.
pub mod checks {
    use super::*;

    /// Exhaustive-search DTW: enumerates every monotone alignment path and
    /// returns the normalized MCD of the lexicographically best
    /// (sum, length) path. Exponential; only for tiny inputs.
    pub fn brute_force_mcd_dtw(reference: &FeatureSequence, candidate: &FeatureSequence) -> f64 {
        let m = reference.n_frames();
        let n = candidate.n_frames();
        assert!(m * n <= 64, "brute-force DTW is for tiny sequences");
        let mut best: Option<(f64, usize)> = None;
        fn recurse(
            reference: &FeatureSequence,
            candidate: &FeatureSequence,
            i: usize,
            j: usize,
            sum: f64,
            len: usize,
            best: &mut Option<(f64, usize)>,
        ) {
            let d = super::cepstral_distance(reference.frame(i), candidate.frame(j));
            let sum = sum + d;
            let len = len + 1;
            let m = reference.n_frames();
            let n = candidate.n_frames();
            if i == m - 1 && j == n - 1 {
                let better = match *best {
                    None => true,
                    Some((bs, bl)) => sum < bs || (sum == bs && len < bl),
                };
                if better {
                    *best = Some((sum, len));
                }
                return;
            }
            if i + 1 < m {
                recurse(reference, candidate, i + 1, j, sum, len, best);
            }
            if j + 1 < n {
                recurse(reference, candidate, i, j + 1, sum, len, best);
            }
            if i + 1 < m && j + 1 < n {
                recurse(reference, candidate, i + 1, j + 1, sum, len, best);
            }
        }
        recurse(reference, candidate, 0, 0, 0.0, 0, &mut best);
        let (sum, len) = best.expect("at least one path exists");
        MCD_DB_SCALE * 2f64.sqrt() * sum / len as f64
    }
}
