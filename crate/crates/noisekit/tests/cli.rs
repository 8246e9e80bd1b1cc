//! End-to-end checks of the `noisekit` binary: exit codes, output file
//! contracts, config-file precedence, and CLI/library agreement.

mod common;

use std::path::{Path, PathBuf};
use std::process::Command;

use common::{gamma_speech, speech_like, white_noise, write_wav};
use noisekit::metrics::evaluate_pair;
use noisekit::pitch::PitchConfig;
use noisekit::spectral::FrameGeometry;
use noisekit::wada::GainTable;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_noisekit"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let output = binary().args(args).output().expect("spawn noisekit");
    (
        output.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&output.stdout).into_owned(),
        String::from_utf8_lossy(&output.stderr).into_owned(),
    )
}

fn small_table(dir: &Path) -> PathBuf {
    let path = dir.join("table.json");
    GainTable::build(1, 100_000).save_json(&path).unwrap();
    path
}

fn arg(path: &Path) -> String {
    path.display().to_string()
}

#[test]
fn no_arguments_is_a_usage_error() {
    let (code, _, _) = run(&[]);
    assert_eq!(code, 1);
    let (code, _, _) = run(&["analyze"]);
    assert_eq!(code, 1);
    let (code, _, _) = run(&["not-a-command"]);
    assert_eq!(code, 1);
}

#[test]
fn help_exits_zero() {
    let (code, _, _) = run(&["--help"]);
    assert_eq!(code, 0);
}

#[test]
fn analyze_writes_one_row_per_file_and_tolerates_bad_files() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    std::fs::create_dir(&corpus).unwrap();
    for i in 0..3 {
        write_wav(
            &corpus,
            &format!("u{i}.wav"),
            &gamma_speech(i, 16_384, 24000),
        );
    }
    let table = small_table(dir.path());
    let out = dir.path().join("out");

    let (code, stdout, _) = run(&[
        "analyze",
        &arg(&corpus),
        "--table",
        &arg(&table),
        "--output",
        &arg(&out),
        "--workers",
        "2",
    ]);
    assert_eq!(code, 0, "stdout: {stdout}");
    let csv = std::fs::read_to_string(out.join("snr_report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4, "header plus three rows");
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("snr_summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["n"], 3);
    assert_eq!(summary["n_errors"], 0);

    // A broken file is listed, not fatal, without --strict.
    std::fs::write(corpus.join("broken.wav"), b"junk").unwrap();
    let out2 = dir.path().join("out2");
    let (code, _, stderr) = run(&[
        "analyze",
        &arg(&corpus),
        "--table",
        &arg(&table),
        "--output",
        &arg(&out2),
    ]);
    assert_eq!(code, 0);
    assert!(stderr.contains("broken.wav"));
    let errors = std::fs::read_to_string(out2.join("snr_errors.csv")).unwrap();
    assert!(errors.lines().count() == 2 && errors.contains("broken.wav"));

    // Under --strict the same run exits 2.
    let out3 = dir.path().join("out3");
    let (code, _, _) = run(&[
        "analyze",
        &arg(&corpus),
        "--table",
        &arg(&table),
        "--output",
        &arg(&out3),
        "--strict",
    ]);
    assert_eq!(code, 2);
}

#[test]
fn analyze_caches_the_gain_table() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    std::fs::create_dir(&corpus).unwrap();
    write_wav(&corpus, "u.wav", &gamma_speech(9, 16_384, 24000));
    let table = dir.path().join("cache.json");

    let (code, _, stderr) = run(&[
        "analyze",
        &arg(&corpus),
        "--table",
        &arg(&table),
        "--table-samples",
        "50000",
        "--output",
        &arg(&dir.path().join("o1")),
    ]);
    assert_eq!(code, 0);
    assert!(stderr.contains("building WADA gain table"));
    assert!(table.exists());

    let (code, _, stderr) = run(&[
        "analyze",
        &arg(&corpus),
        "--table",
        &arg(&table),
        "--output",
        &arg(&dir.path().join("o2")),
    ]);
    assert_eq!(code, 0);
    assert!(!stderr.contains("building WADA gain table"), "{stderr}");

    // Identical estimates from the cached table.
    let a = std::fs::read(dir.path().join("o1/snr_report.csv")).unwrap();
    let b = std::fs::read(dir.path().join("o2/snr_report.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn augment_is_reproducible_and_respects_the_range() {
    let dir = tempfile::tempdir().unwrap();
    let speech = dir.path().join("speech");
    let noise = dir.path().join("noise");
    std::fs::create_dir_all(&speech).unwrap();
    std::fs::create_dir_all(&noise).unwrap();
    for i in 0..10 {
        write_wav(&speech, &format!("s{i}.wav"), &speech_like(i, 24000, 24000));
    }
    write_wav(&noise, "n0.wav", &white_noise(50, 48000, 24000, 0.3));
    write_wav(&noise, "n1.wav", &white_noise(51, 48000, 24000, 0.3));

    let out = dir.path().join("aug");
    let args = [
        "augment",
        "--speech",
        &arg(&speech),
        "--noise",
        &arg(&noise),
        "--snr-range",
        "5:25",
        "--seed",
        "42",
        "--output",
        &arg(&out),
    ];
    let (code, _, _) = run(&args);
    assert_eq!(code, 0);
    let manifest_a = std::fs::read_to_string(out.join("augment_manifest.jsonl")).unwrap();
    assert_eq!(manifest_a.lines().count(), 10);
    for line in manifest_a.lines() {
        let record: serde_json::Value = serde_json::from_str(line).unwrap();
        let target = record["target_snr_db"].as_f64().unwrap();
        let realized = record["realized_snr_db"].as_f64().unwrap();
        assert!((5.0..=25.0).contains(&target));
        assert!((realized - target).abs() <= 0.01);
        assert_eq!(record["seed"], 42);
    }

    // Same seed, same outputs (bytes), run into the same directory.
    let wav_a = std::fs::read(out.join("s3.wav")).unwrap();
    common::clear_dir(&out);
    let (code, _, _) = run(&args);
    assert_eq!(code, 0);
    let manifest_b = std::fs::read_to_string(out.join("augment_manifest.jsonl")).unwrap();
    assert_eq!(manifest_a, manifest_b);
    assert_eq!(wav_a, std::fs::read(out.join("s3.wav")).unwrap());
}

#[test]
fn augment_second_half_keeps_first_half_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let speech = dir.path().join("speech");
    let noise = dir.path().join("noise");
    std::fs::create_dir_all(&speech).unwrap();
    std::fs::create_dir_all(&noise).unwrap();
    let original = speech_like(3, 24000, 24000);
    write_wav(&speech, "s.wav", &original);
    write_wav(&noise, "n.wav", &white_noise(60, 24000, 24000, 0.3));

    let out = dir.path().join("aug");
    let (code, _, _) = run(&[
        "augment",
        "--speech",
        &arg(&speech),
        "--noise",
        &arg(&noise),
        "--region",
        "second_half",
        "--output",
        &arg(&out),
    ]);
    assert_eq!(code, 0);
    let augmented = noisekit::audio::load_wav(&out.join("s.wav")).unwrap();
    let reload = noisekit::audio::load_wav(&speech.join("s.wav")).unwrap();
    assert_eq!(augmented.samples[..12000], reload.samples[..12000]);
    assert!(augmented.samples[12000..] != reload.samples[12000..]);
}

#[test]
fn features_dumps_are_deterministic_with_expected_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    std::fs::create_dir(&corpus).unwrap();
    write_wav(&corpus, "tone.wav", &speech_like(7, 24000, 24000));

    let out = dir.path().join("feat");
    let (code, _, _) = run(&["features", &arg(&corpus), "--output", &arg(&out)]);
    assert_eq!(code, 0);
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("tone.mel.json")).unwrap()).unwrap();
    let expected_frames = 1 + (24000 - 1024) / 256;
    assert_eq!(sidecar["T"], expected_frames);
    assert_eq!(sidecar["D"], 80);
    assert_eq!(sidecar["kind"], "mel_80");
    assert_eq!(sidecar["sample_rate"], 24000);

    let first = common::snapshot_dir(&out);
    common::clear_dir(&out);
    let (code, _, _) = run(&[
        "features",
        &arg(&corpus),
        "--output",
        &arg(&out),
        "--workers",
        "8",
    ]);
    assert_eq!(code, 0);
    assert_eq!(first, common::snapshot_dir(&out));
}

#[test]
fn eval_matches_the_library_and_reports_unmatched_files() {
    let dir = tempfile::tempdir().unwrap();
    let refs = dir.path().join("ref");
    let cands = dir.path().join("cand");
    std::fs::create_dir_all(&refs).unwrap();
    std::fs::create_dir_all(&cands).unwrap();
    let ref_buf = speech_like(20, 24000, 24000);
    let cand_buf = speech_like(21, 24000, 24000);
    write_wav(&refs, "a.wav", &ref_buf);
    write_wav(&cands, "a.wav", &cand_buf);
    write_wav(&refs, "lonely.wav", &speech_like(22, 24000, 24000));

    let out = dir.path().join("eval");
    let (code, _, stderr) = run(&[
        "eval",
        "--ref",
        &arg(&refs),
        "--cand",
        &arg(&cands),
        "--output",
        &arg(&out),
    ]);
    assert_eq!(code, 0);
    assert!(stderr.contains("unmatched"), "{stderr}");

    let csv = std::fs::read_to_string(out.join("eval_report.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("pair,gpe,vde,ffe,mcd_db"));
    let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(fields[0], "a");

    // The CSV holds exactly what the library computes.
    let expected = evaluate_pair(
        &refs.join("a.wav"),
        &cands.join("a.wav"),
        &FrameGeometry::default(),
        &PitchConfig::default(),
    )
    .unwrap();
    assert_eq!(fields[1].parse::<f64>().unwrap(), expected.gpe);
    assert_eq!(fields[2].parse::<f64>().unwrap(), expected.vde);
    assert_eq!(fields[3].parse::<f64>().unwrap(), expected.ffe);
    assert_eq!(fields[4].parse::<f64>().unwrap(), expected.mcd_db);

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("eval_summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["n_pairs"], 1);
    assert_eq!(summary["n_unmatched"], 1);
}

#[test]
fn eval_of_identical_directories_is_all_zero() {
    let dir = tempfile::tempdir().unwrap();
    let refs = dir.path().join("ref");
    std::fs::create_dir_all(&refs).unwrap();
    for i in 0..3 {
        write_wav(
            &refs,
            &format!("u{i}.wav"),
            &speech_like(30 + i, 24000, 24000),
        );
    }
    let out = dir.path().join("eval");
    let (code, stdout, _) = run(&[
        "eval",
        "--ref",
        &arg(&refs),
        "--cand",
        &arg(&refs),
        "--output",
        &arg(&out),
    ]);
    assert_eq!(code, 0, "{stdout}");
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("eval_summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["gpe"], 0.0);
    assert_eq!(summary["vde"], 0.0);
    assert_eq!(summary["ffe"], 0.0);
    assert_eq!(summary["mcd_db"], 0.0);
}

#[test]
fn eval_accepts_an_explicit_pairs_file() {
    let dir = tempfile::tempdir().unwrap();
    let audio = dir.path().join("audio");
    std::fs::create_dir_all(&audio).unwrap();
    // Names deliberately do not match, so only --pairs can relate them.
    let a = write_wav(&audio, "original.wav", &speech_like(50, 24000, 24000));
    let b = write_wav(&audio, "resynth.wav", &speech_like(50, 24000, 24000));
    let pairs_path = dir.path().join("pairs.csv");
    std::fs::write(
        &pairs_path,
        format!("# ref,cand\n{},{}\n", a.display(), b.display()),
    )
    .unwrap();

    let out = dir.path().join("eval");
    let (code, stdout, _) = run(&["eval", "--pairs", &arg(&pairs_path), "--output", &arg(&out)]);
    assert_eq!(code, 0, "{stdout}");
    let csv = std::fs::read_to_string(out.join("eval_report.csv")).unwrap();
    let row = csv.lines().nth(1).unwrap();
    assert!(row.starts_with("original,"));
    // Identical audio under different names scores zero everywhere.
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("eval_summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["mcd_db"], 0.0);
    assert_eq!(summary["ffe"], 0.0);

    // --pairs conflicts with --ref/--cand.
    let (code, _, _) = run(&[
        "eval",
        "--pairs",
        &arg(&pairs_path),
        "--ref",
        &arg(&audio),
        "--cand",
        &arg(&audio),
        "--output",
        &arg(&out),
    ]);
    assert_eq!(code, 1);
}

#[test]
fn config_file_applies_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let speech = dir.path().join("speech");
    let noise = dir.path().join("noise");
    std::fs::create_dir_all(&speech).unwrap();
    std::fs::create_dir_all(&noise).unwrap();
    for i in 0..3 {
        write_wav(
            &speech,
            &format!("s{i}.wav"),
            &speech_like(40 + i, 24000, 24000),
        );
    }
    write_wav(&noise, "n.wav", &white_noise(70, 48000, 24000, 0.3));

    let config_path = dir.path().join("config.json");
    let out_config = dir.path().join("via_config");
    std::fs::write(
        &config_path,
        serde_json::json!({
            "seed": 7,
            "snr_low": 12.0,
            "snr_high": 12.0,
            "output": out_config,
        })
        .to_string(),
    )
    .unwrap();

    // Config supplies seed, range, and output directory.
    let (code, _, _) = run(&[
        "augment",
        "--speech",
        &arg(&speech),
        "--noise",
        &arg(&noise),
        "--config",
        &arg(&config_path),
    ]);
    assert_eq!(code, 0);
    let manifest = std::fs::read_to_string(out_config.join("augment_manifest.jsonl")).unwrap();
    for line in manifest.lines() {
        let record: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(record["target_snr_db"], 12.0);
        assert_eq!(record["seed"], 7);
    }

    // A flag beats the config value.
    let out_flag = dir.path().join("via_flag");
    let (code, _, _) = run(&[
        "augment",
        "--speech",
        &arg(&speech),
        "--noise",
        &arg(&noise),
        "--config",
        &arg(&config_path),
        "--seed",
        "8",
        "--output",
        &arg(&out_flag),
    ]);
    assert_eq!(code, 0);
    let manifest = std::fs::read_to_string(out_flag.join("augment_manifest.jsonl")).unwrap();
    for line in manifest.lines() {
        let record: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(record["seed"], 8);
    }
}

#[test]
fn kernels_selftest_passes_and_prints_one_line_per_suite() {
    let (code, stdout, _) = run(&["kernels", "selftest", "--seed", "3"]);
    assert_eq!(code, 0, "{stdout}");
    let pass_lines = stdout.lines().filter(|l| l.starts_with("PASS")).count();
    assert_eq!(pass_lines, 5, "{stdout}");
    assert!(!stdout.contains("FAIL"));
}
