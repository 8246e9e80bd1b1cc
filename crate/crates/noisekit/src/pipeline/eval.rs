//! Pairwise reference/candidate evaluation over two directories.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::audio::load_wav;
use crate::metrics::{evaluate_buffers, MetricReport};
use crate::pitch::PitchConfig;

use super::{
    csv_field, ensure_output_dir, file_stem, list_audio_inputs, par_map_ordered, write_text,
    GeometrySpec, PipelineError,
};

/// One evaluated pair, keyed by the shared file stem.
#[derive(Debug, Clone)]
pub struct PairResult {
    pub stem: String,
    pub ref_path: PathBuf,
    pub cand_path: PathBuf,
    pub report: Result<MetricReport, String>,
}

/// Aggregate means over the successfully evaluated pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalSummary {
    pub gpe: Option<f64>,
    pub vde: Option<f64>,
    pub ffe: Option<f64>,
    pub mcd_db: Option<f64>,
    pub n_pairs: usize,
    pub n_errors: usize,
    pub n_unmatched: usize,
}

#[derive(Debug)]
pub struct EvalReport {
    pub pairs: Vec<PairResult>,
    /// Files present on one side only.
    pub unmatched: Vec<PathBuf>,
    pub summary: EvalSummary,
    pub report_csv: PathBuf,
    pub summary_json: PathBuf,
}

/// Pairs `ref_dir` and `cand_dir` WAVs by file stem, scores each pair, and
/// writes `eval_report.csv` (pair, gpe, vde, ffe, mcd_db) plus
/// `eval_summary.json`. Unmatched files are reported, never fatal.
pub fn run_eval(
    ref_dir: &Path,
    cand_dir: &Path,
    geometry: &GeometrySpec,
    pitch_config: &PitchConfig,
    output_dir: &Path,
    workers: usize,
) -> Result<EvalReport, PipelineError> {
    let ref_files = list_audio_inputs(&[ref_dir.to_path_buf()])?;
    let cand_files = list_audio_inputs(&[cand_dir.to_path_buf()])?;

    let ref_by_stem: BTreeMap<String, PathBuf> = ref_files
        .iter()
        .map(|p| (file_stem(p), p.clone()))
        .collect();
    let cand_by_stem: BTreeMap<String, PathBuf> = cand_files
        .iter()
        .map(|p| (file_stem(p), p.clone()))
        .collect();

    let mut matched: Vec<(String, PathBuf, PathBuf)> = Vec::new();
    let mut unmatched: Vec<PathBuf> = Vec::new();
    for (stem, ref_path) in &ref_by_stem {
        match cand_by_stem.get(stem) {
            Some(cand_path) => matched.push((stem.clone(), ref_path.clone(), cand_path.clone())),
            None => unmatched.push(ref_path.clone()),
        }
    }
    for (stem, cand_path) in &cand_by_stem {
        if !ref_by_stem.contains_key(stem) {
            unmatched.push(cand_path.clone());
        }
    }
    unmatched.sort();
    run_eval_on(
        matched,
        unmatched,
        geometry,
        pitch_config,
        output_dir,
        workers,
    )
}

/// Scores an explicit pair list (`ref_path, cand_path` per entry) instead
/// of pairing directories by stem.
pub fn run_eval_pairs(
    pairs: &[(PathBuf, PathBuf)],
    geometry: &GeometrySpec,
    pitch_config: &PitchConfig,
    output_dir: &Path,
    workers: usize,
) -> Result<EvalReport, PipelineError> {
    let matched: Vec<(String, PathBuf, PathBuf)> = pairs
        .iter()
        .map(|(r, c)| (file_stem(r), r.clone(), c.clone()))
        .collect();
    run_eval_on(
        matched,
        Vec::new(),
        geometry,
        pitch_config,
        output_dir,
        workers,
    )
}

fn run_eval_on(
    matched: Vec<(String, PathBuf, PathBuf)>,
    unmatched: Vec<PathBuf>,
    geometry: &GeometrySpec,
    pitch_config: &PitchConfig,
    output_dir: &Path,
    workers: usize,
) -> Result<EvalReport, PipelineError> {
    ensure_output_dir(output_dir)?;
    if matched.is_empty() {
        return Err(PipelineError::EmptyInputs);
    }

    let pairs: Vec<PairResult> =
        par_map_ordered(&matched, workers, |(stem, ref_path, cand_path)| {
            let report = (|| -> Result<MetricReport, String> {
                let reference = load_wav(ref_path).map_err(|e| e.to_string())?;
                let candidate = load_wav(cand_path).map_err(|e| e.to_string())?;
                let g = geometry.for_rate(reference.sample_rate);
                evaluate_buffers(&reference, &candidate, &g, pitch_config)
                    .map_err(|e| e.to_string())
            })();
            PairResult {
                stem: stem.clone(),
                ref_path: ref_path.clone(),
                cand_path: cand_path.clone(),
                report,
            }
        });

    let ok: Vec<&MetricReport> = pairs
        .iter()
        .filter_map(|p| p.report.as_ref().ok())
        .collect();
    let mean = |pick: fn(&MetricReport) -> f64| -> Option<f64> {
        if ok.is_empty() {
            None
        } else {
            Some(ok.iter().map(|r| pick(r)).sum::<f64>() / ok.len() as f64)
        }
    };
    let summary = EvalSummary {
        gpe: mean(|r| r.gpe),
        vde: mean(|r| r.vde),
        ffe: mean(|r| r.ffe),
        mcd_db: mean(|r| r.mcd_db),
        n_pairs: ok.len(),
        n_errors: pairs.len() - ok.len(),
        n_unmatched: unmatched.len(),
    };

    let mut csv = String::from("pair,gpe,vde,ffe,mcd_db\n");
    for pair in &pairs {
        if let Ok(report) = &pair.report {
            writeln!(
                csv,
                "{},{},{},{},{}",
                csv_field(&pair.stem),
                report.gpe,
                report.vde,
                report.ffe,
                report.mcd_db
            )
            .expect("string write");
        }
    }
    let mut errors_block = String::new();
    for pair in &pairs {
        if let Err(message) = &pair.report {
            writeln!(
                errors_block,
                "{},{}",
                csv_field(&pair.stem),
                csv_field(message)
            )
            .expect("string write");
        }
    }

    let report_csv = output_dir.join("eval_report.csv");
    let summary_json = output_dir.join("eval_summary.json");
    let errors_csv = output_dir.join("eval_errors.csv");
    write_text(&report_csv, &csv)?;
    write_text(&errors_csv, &(String::from("pair,error\n") + &errors_block))?;
    let json = serde_json::to_string_pretty(&summary)?;
    write_text(&summary_json, &(json + "\n"))?;

    Ok(EvalReport {
        pairs,
        unmatched,
        summary,
        report_csv,
        summary_json,
    })
}
