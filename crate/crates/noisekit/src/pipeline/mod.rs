//! Parallel corpus drivers behind the CLI subcommands.
//!
//! Every driver follows the same discipline: inputs are sorted by path,
//! per-file work runs on a fixed-size worker pool, results are buffered
//! and written in canonical order, and workers share only immutable state.
//! Output bytes are therefore identical for any worker count.

mod analyze;
mod augment;
mod eval;
mod features;

pub use analyze::{run_analyze, AnalyzeReport};
pub use augment::{run_augment, AugmentJob, AugmentReport};
pub use eval::{run_eval, run_eval_pairs, EvalReport, EvalSummary, PairResult};
pub use features::{run_features, FeatureOutputs, FeaturesReport};

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::spectral::FrameGeometry;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("no input files found")]
    EmptyInputs,
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("duplicate output name {stem:?} (from {first} and {second}); rename the inputs")]
    DuplicateStem {
        stem: String,
        first: String,
        second: String,
    },
    #[error("invalid option: {0}")]
    InvalidOption(String),
    #[error(transparent)]
    Wada(#[from] crate::wada::WadaError),
    #[error(transparent)]
    Augment(#[from] crate::augment::AugmentError),
    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Framing parameters without a sample rate; the rate always comes from
/// the file being processed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeometrySpec {
    pub window: usize,
    pub hop: usize,
    pub fft: usize,
}

impl Default for GeometrySpec {
    fn default() -> Self {
        let g = FrameGeometry::default();
        GeometrySpec {
            window: g.window_length,
            hop: g.hop_length,
            fft: g.fft_size,
        }
    }
}

impl GeometrySpec {
    pub fn for_rate(&self, sample_rate: u32) -> FrameGeometry {
        FrameGeometry {
            window_length: self.window,
            hop_length: self.hop,
            fft_size: self.fft,
            sample_rate,
        }
    }
}

/// Expands directories to their `.wav` files, then sorts and dedupes.
/// The canonical input order for every driver.
pub fn list_audio_inputs(paths: &[PathBuf]) -> Result<Vec<PathBuf>, PipelineError> {
    let mut files = Vec::new();
    for path in paths {
        if path.is_dir() {
            let entries = std::fs::read_dir(path).map_err(io_err(path))?;
            for entry in entries {
                let entry = entry.map_err(io_err(path))?.path();
                if entry.extension().and_then(|e| e.to_str()) == Some("wav") {
                    files.push(entry);
                }
            }
        } else {
            files.push(path.clone());
        }
    }
    files.sort();
    files.dedup();
    if files.is_empty() {
        return Err(PipelineError::EmptyInputs);
    }
    Ok(files)
}

pub(crate) fn ensure_output_dir(dir: &Path) -> Result<(), PipelineError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))
}

/// Maps `f` over `items` on a pool of exactly `workers` threads,
/// preserving item order in the result.
pub fn par_map_ordered<T: Sync, R: Send, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    F: Fn(&T) -> R + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("worker pool");
    pool.install(|| items.par_iter().map(f).collect())
}

/// Quotes a CSV field only when it contains a delimiter, quote, or
/// newline.
pub(crate) fn csv_field(value: &str) -> String {
    if value.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), PipelineError> {
    std::fs::write(path, text).map_err(io_err(path))
}

pub(crate) fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Fails when two inputs would collide on the same output stem.
pub(crate) fn check_unique_stems(paths: &[PathBuf]) -> Result<(), PipelineError> {
    let mut seen: std::collections::HashMap<String, &PathBuf> = std::collections::HashMap::new();
    for path in paths {
        let stem = file_stem(path);
        if let Some(first) = seen.get(&stem) {
            return Err(PipelineError::DuplicateStem {
                stem,
                first: first.display().to_string(),
                second: path.display().to_string(),
            });
        }
        seen.insert(stem, path);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quoting_only_when_needed() {
        assert_eq!(csv_field("plain.wav"), "plain.wav");
        assert_eq!(csv_field("with,comma"), "\"with,comma\"");
        assert_eq!(csv_field("with\"quote"), "\"with\"\"quote\"");
    }

    #[test]
    fn input_listing_sorts_and_dedupes() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["b.wav", "a.wav", "c.txt"] {
            std::fs::write(dir.path().join(name), b"x").unwrap();
        }
        let listed = list_audio_inputs(&[dir.path().to_path_buf()]).unwrap();
        let names: Vec<String> = listed.iter().map(|p| file_stem(p)).collect();
        assert_eq!(names, ["a", "b"]);

        let explicit = dir.path().join("a.wav");
        let with_dup = list_audio_inputs(&[dir.path().to_path_buf(), explicit]).unwrap();
        assert_eq!(with_dup.len(), 2);
    }

    #[test]
    fn empty_inputs_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            list_audio_inputs(&[dir.path().to_path_buf()]),
            Err(PipelineError::EmptyInputs)
        ));
    }

    #[test]
    fn par_map_preserves_order_for_any_worker_count() {
        let items: Vec<u64> = (0..100).collect();
        let expected: Vec<u64> = items.iter().map(|x| x * x).collect();
        for workers in [1, 4, 8] {
            let got = par_map_ordered(&items, workers, |x| x * x);
            assert_eq!(got, expected);
        }
    }

    #[test]
    fn duplicate_stems_are_rejected() {
        let a = PathBuf::from("/one/x.wav");
        let b = PathBuf::from("/two/x.wav");
        assert!(check_unique_stems(std::slice::from_ref(&a)).is_ok());
        assert!(matches!(
            check_unique_stems(&[a, b]),
            Err(PipelineError::DuplicateStem { .. })
        ));
    }
}
