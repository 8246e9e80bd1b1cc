//! Corpus-wide WADA-SNR analysis.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::wada::{estimate_snr_file, summarize, FileEstimate, GainTable, SnrSummary};

use super::{csv_field, ensure_output_dir, par_map_ordered, write_text, PipelineError};

#[derive(Debug)]
pub struct AnalyzeReport {
    pub files: Vec<FileEstimate>,
    pub summary: SnrSummary,
    pub report_csv: PathBuf,
    pub errors_csv: PathBuf,
    pub summary_json: PathBuf,
}

/// Estimates every input's SNR in parallel and writes
/// `snr_report.csv` (path, snr_db, clipped), `snr_errors.csv`
/// (path, error), and `snr_summary.json`.
pub fn run_analyze(
    inputs: &[PathBuf],
    table: &GainTable,
    output_dir: &Path,
    workers: usize,
) -> Result<AnalyzeReport, PipelineError> {
    if inputs.is_empty() {
        return Err(PipelineError::EmptyInputs);
    }
    let mut sorted: Vec<PathBuf> = inputs.to_vec();
    sorted.sort();
    ensure_output_dir(output_dir)?;

    let files: Vec<FileEstimate> = par_map_ordered(&sorted, workers, |path| FileEstimate {
        path: path.clone(),
        result: estimate_snr_file(path, table).map_err(|e| e.to_string()),
    });

    let ok_values: Vec<f64> = files
        .iter()
        .filter_map(|f| f.result.as_ref().ok().map(|e| e.snr_db))
        .collect();
    let summary = summarize(&ok_values, files.len() - ok_values.len());

    let mut report = String::from("path,snr_db,clipped\n");
    let mut errors = String::from("path,error\n");
    for file in &files {
        let path = csv_field(&file.path.display().to_string());
        match &file.result {
            Ok(estimate) => {
                writeln!(report, "{path},{},{}", estimate.snr_db, estimate.clipped)
                    .expect("string write");
            }
            Err(message) => {
                writeln!(errors, "{path},{}", csv_field(message)).expect("string write");
            }
        }
    }

    let report_csv = output_dir.join("snr_report.csv");
    let errors_csv = output_dir.join("snr_errors.csv");
    let summary_json = output_dir.join("snr_summary.json");
    write_text(&report_csv, &report)?;
    write_text(&errors_csv, &errors)?;
    let json = serde_json::to_string_pretty(&summary)?;
    write_text(&summary_json, &(json + "\n"))?;

    Ok(AnalyzeReport {
        files,
        summary,
        report_csv,
        errors_csv,
        summary_json,
    })
}
