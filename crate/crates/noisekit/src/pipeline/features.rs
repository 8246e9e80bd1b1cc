//! Per-file feature extraction dumps.

use std::path::{Path, PathBuf};

use crate::audio::load_wav;
use crate::pitch::{track_pitch, PitchConfig, PitchTrack};
use crate::spectral::{bark_cepstra, mel_features, FeatureSequence};

use super::{
    check_unique_stems, csv_field, ensure_output_dir, file_stem, par_map_ordered, write_text,
    GeometrySpec, PipelineError,
};

/// Paths of the six artifacts written per input.
#[derive(Debug, Clone)]
pub struct FeatureOutputs {
    pub input: PathBuf,
    pub mel_matrix: PathBuf,
    pub mel_sidecar: PathBuf,
    pub bark_matrix: PathBuf,
    pub bark_sidecar: PathBuf,
    pub pitch_csv: PathBuf,
}

#[derive(Debug)]
pub struct FeaturesReport {
    pub outputs: Vec<FeatureOutputs>,
    pub errors: Vec<(PathBuf, String)>,
    pub errors_csv: PathBuf,
}

/// Extracts mel, bark-cepstra, and pitch dumps for every input:
/// `{stem}.mel.f32/.json`, `{stem}.bark.f32/.json`, `{stem}.pitch.csv`.
/// The frame geometry adopts each file's own sample rate.
pub fn run_features(
    inputs: &[PathBuf],
    geometry: &GeometrySpec,
    pitch_config: &PitchConfig,
    output_dir: &Path,
    workers: usize,
) -> Result<FeaturesReport, PipelineError> {
    if inputs.is_empty() {
        return Err(PipelineError::EmptyInputs);
    }
    let mut sorted: Vec<PathBuf> = inputs.to_vec();
    sorted.sort();
    check_unique_stems(&sorted)?;
    ensure_output_dir(output_dir)?;

    type Extracted = (FeatureSequence, FeatureSequence, PitchTrack);
    let results: Vec<Result<Extracted, String>> = par_map_ordered(&sorted, workers, |path| {
        let buffer = load_wav(path).map_err(|e| e.to_string())?;
        let g = geometry.for_rate(buffer.sample_rate);
        let mel = mel_features(&buffer, &g).map_err(|e| e.to_string())?;
        let bark = bark_cepstra(&buffer, &g).map_err(|e| e.to_string())?;
        let pitch = track_pitch(&buffer, &g, pitch_config).map_err(|e| e.to_string())?;
        Ok((mel, bark, pitch))
    });

    let mut outputs = Vec::new();
    let mut errors = Vec::new();
    let mut errors_text = String::from("path,error\n");
    for (path, result) in sorted.iter().zip(results) {
        match result {
            Ok((mel, bark, pitch)) => {
                let stem = file_stem(path);
                let paths = FeatureOutputs {
                    input: path.clone(),
                    mel_matrix: output_dir.join(format!("{stem}.mel.f32")),
                    mel_sidecar: output_dir.join(format!("{stem}.mel.json")),
                    bark_matrix: output_dir.join(format!("{stem}.bark.f32")),
                    bark_sidecar: output_dir.join(format!("{stem}.bark.json")),
                    pitch_csv: output_dir.join(format!("{stem}.pitch.csv")),
                };
                let io = |e: crate::spectral::SpectralError| PipelineError::Io {
                    path: path.display().to_string(),
                    source: std::io::Error::other(e.to_string()),
                };
                mel.save(&paths.mel_matrix, &paths.mel_sidecar)
                    .map_err(io)?;
                bark.save(&paths.bark_matrix, &paths.bark_sidecar)
                    .map_err(io)?;
                pitch
                    .write_csv(&paths.pitch_csv)
                    .map_err(|e| PipelineError::Io {
                        path: paths.pitch_csv.display().to_string(),
                        source: std::io::Error::other(e.to_string()),
                    })?;
                outputs.push(paths);
            }
            Err(message) => {
                use std::fmt::Write as _;
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

    let errors_csv = output_dir.join("features_errors.csv");
    write_text(&errors_csv, &errors_text)?;

    Ok(FeaturesReport {
        outputs,
        errors,
        errors_csv,
    })
}
