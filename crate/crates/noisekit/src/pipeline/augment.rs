//! Corpus-level noise augmentation with a JSONL provenance manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::audio::{load_wav, save_wav, AudioBuffer, WavEncoding};
use crate::augment::{mix_at_snr, sample_augmentation, AugmentationRecord, Region, SnrReference};

use super::{
    check_unique_stems, csv_field, ensure_output_dir, file_stem, io_err, par_map_ordered,
    write_text, PipelineError,
};

/// Corpus-level augmentation parameters.
#[derive(Debug, Clone)]
pub struct AugmentJob {
    pub snr_range_db: (f64, f64),
    pub region: Region,
    pub snr_reference: SnrReference,
    pub allow_wrap: bool,
    pub seed: u64,
}

impl Default for AugmentJob {
    fn default() -> Self {
        AugmentJob {
            snr_range_db: (5.0, 25.0),
            region: Region::Full,
            snr_reference: SnrReference::RegionPower,
            allow_wrap: false,
            seed: 0,
        }
    }
}

#[derive(Debug)]
pub struct AugmentReport {
    /// One record per successfully augmented input, in input order.
    pub records: Vec<AugmentationRecord>,
    /// (speech path, error) for inputs that failed, in input order.
    pub errors: Vec<(PathBuf, String)>,
    pub manifest_path: PathBuf,
    pub errors_csv: PathBuf,
}

/// Mixes noise into every speech file per a seeded plan and writes one
/// float32 WAV plus one manifest line per input. Fully reproducible:
/// the plan depends only on (sorted inputs, seed).
pub fn run_augment(
    speech_paths: &[PathBuf],
    noise_paths: &[PathBuf],
    job: &AugmentJob,
    output_dir: &Path,
    workers: usize,
) -> Result<AugmentReport, PipelineError> {
    let mut speech: Vec<PathBuf> = speech_paths.to_vec();
    speech.sort();
    let mut noise: Vec<PathBuf> = noise_paths.to_vec();
    noise.sort();
    if speech.is_empty() || noise.is_empty() {
        return Err(PipelineError::EmptyInputs);
    }
    check_unique_stems(&speech)?;
    ensure_output_dir(output_dir)?;

    let mut plans = sample_augmentation(speech.len(), noise.len(), job.snr_range_db, job.seed)?;
    for plan in plans.iter_mut() {
        plan.spec.region = job.region;
        plan.spec.snr_reference = job.snr_reference;
        plan.spec.allow_wrap = job.allow_wrap;
    }

    // Noise files are shared across plans; load each once.
    let noise_buffers: Vec<Result<AudioBuffer, String>> =
        par_map_ordered(&noise, workers, |path| {
            load_wav(path).map_err(|e| e.to_string())
        });

    struct PlanOutcome {
        record: Result<AugmentationRecord, String>,
        output: Option<(PathBuf, AudioBuffer)>,
    }

    let outcomes: Vec<PlanOutcome> = par_map_ordered(&plans, workers, |plan| {
        let speech_path = &speech[plan.speech_index];
        let noise_path = &noise[plan.noise_index];
        let run = || -> Result<(AugmentationRecord, PathBuf, AudioBuffer), String> {
            let speech_buf = load_wav(speech_path).map_err(|e| e.to_string())?;
            let noise_buf = noise_buffers[plan.noise_index]
                .as_ref()
                .map_err(|e| e.clone())?;
            let (mixed, outcome) =
                mix_at_snr(&speech_buf, noise_buf, &plan.spec).map_err(|e| e.to_string())?;
            let output_path = output_dir.join(format!("{}.wav", file_stem(speech_path)));
            let record = AugmentationRecord {
                speech_path: speech_path.display().to_string(),
                noise_path: noise_path.display().to_string(),
                target_snr_db: plan.spec.target_snr_db,
                realized_snr_db: outcome
                    .realized_snr_db
                    .is_finite()
                    .then_some(outcome.realized_snr_db),
                region: plan.spec.region,
                noise_offset: outcome.noise_offset as u64,
                seed: job.seed,
                output_path: output_path.display().to_string(),
                clipped: outcome.clipped,
            };
            Ok((record, output_path, mixed))
        };
        match run() {
            Ok((record, path, mixed)) => PlanOutcome {
                record: Ok(record),
                output: Some((path, mixed)),
            },
            Err(message) => PlanOutcome {
                record: Err(message),
                output: None,
            },
        }
    });

    // Emit in canonical order after all work is done.
    let mut records = Vec::new();
    let mut errors = Vec::new();
    let mut manifest = String::new();
    let mut errors_text = String::from("path,error\n");
    for (plan, outcome) in plans.iter().zip(outcomes) {
        match outcome.record {
            Ok(record) => {
                let (path, mixed) = outcome.output.expect("success carries audio");
                save_wav(&mixed, &path, WavEncoding::Float32).map_err(|e| PipelineError::Io {
                    path: path.display().to_string(),
                    source: std::io::Error::other(e.to_string()),
                })?;
                writeln!(manifest, "{}", serde_json::to_string(&record)?).expect("string write");
                records.push(record);
            }
            Err(message) => {
                let path = &speech[plan.speech_index];
                writeln!(
                    errors_text,
                    "{},{}",
                    csv_field(&path.display().to_string()),
                    csv_field(&message)
                )
                .expect("string write");
                errors.push((path.clone(), message));
            }
        }
    }

    let manifest_path = output_dir.join("augment_manifest.jsonl");
    let errors_csv = output_dir.join("augment_errors.csv");
    std::fs::write(&manifest_path, manifest).map_err(io_err(&manifest_path))?;
    write_text(&errors_csv, &errors_text)?;

    Ok(AugmentReport {
        records,
        errors,
        manifest_path,
        errors_csv,
    })
}
