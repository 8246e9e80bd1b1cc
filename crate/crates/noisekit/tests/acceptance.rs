//! Acceptance suite: one test per release criterion, each printing a
//! single PASS line with the measured margin. Run with `--nocapture` to
//! see the lines for passing criteria too.

mod common;

use std::path::Path;
use std::process::Command;

use common::{clear_dir, gamma_speech, snapshot_dir, speech_like, white_noise, write_wav};
use noisekit::audio::AudioBuffer;
use noisekit::augment::{mix_at_snr, AugmentationSpec, Region};
use noisekit::metrics::{checks as metric_checks, mcd, pitch_metrics, Alignment};
use noisekit::pitch::PitchTrack;
use noisekit::rng::CounterRng;
use noisekit::spectral::{bark_cepstra, FeatureKind, FeatureSequence, FrameGeometry};
use noisekit::train_math::checks;
use noisekit::train_math::{learning_rate, pooling_probability, PoolingSchedule};
use noisekit::wada::{estimate_snr, synthetic_gamma_speech, GainTable};

/// Criterion 1: mixing exactness. For targets {5, 10, 15, 20, 25} dB the
/// realized region SNR, recomputed from output minus speech, must equal
/// the target within 0.01 dB.
#[test]
fn acceptance_1_mixing_exactness() {
    let rate = 24000;
    let speech = speech_like(101, 48_000, rate);
    let noise = white_noise(202, 48_000, rate, 0.3);
    let mut max_deviation = 0.0f64;
    for target in [5.0, 10.0, 15.0, 20.0, 25.0] {
        for region in [Region::Full, Region::SecondHalf] {
            let spec = AugmentationSpec::new(target, region);
            let (output, _) = mix_at_snr(&speech, &noise, &spec).expect("mix");
            let range = match region {
                Region::Full => 0..speech.len(),
                Region::SecondHalf => speech.len() / 2..speech.len(),
                Region::Interval { .. } => unreachable!(),
            };
            let p_speech = speech.power(range.clone());
            let p_added = range
                .clone()
                .map(|i| {
                    let d = output.samples[i] - speech.samples[i];
                    d * d
                })
                .sum::<f64>()
                / range.len() as f64;
            let realized = 10.0 * (p_speech / p_added).log10();
            max_deviation = max_deviation.max((realized - target).abs());
        }
    }
    assert!(max_deviation <= 0.01, "max deviation {max_deviation} dB");
    println!(
        "acceptance 1 mixing-exactness: PASS (max |realized - target| = {max_deviation:.2e} dB over 5..25 dB, full and second-half regions)"
    );
}

fn mix_at(speech: &[f64], noise: &[f64], snr_db: f64) -> Vec<f64> {
    let p_s = speech.iter().map(|x| x * x).sum::<f64>() / speech.len() as f64;
    let p_n = noise.iter().map(|x| x * x).sum::<f64>() / noise.len() as f64;
    let gain = (p_s / (p_n * 10f64.powf(snr_db / 10.0))).sqrt();
    speech
        .iter()
        .zip(noise)
        .map(|(s, n)| s + gain * n)
        .collect()
}

/// Criterion 2: WADA self-consistency. Synthetic gamma speech plus
/// Gaussian noise mixed at {0, 5, 10, 15, 20, 25, 30} dB: the median
/// estimate over 50 seeds is within 1.5 dB of the truth, and the
/// seed-averaged curve is strictly monotone.
#[test]
fn acceptance_2_wada_self_consistency() {
    let table = GainTable::default_table();
    let truths = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0];
    let n = 32_768;
    let seeds = 50;
    let mut means = Vec::new();
    let mut worst_median_error = 0.0f64;
    for (i, &truth) in truths.iter().enumerate() {
        let mut estimates = Vec::with_capacity(seeds);
        for seed in 0..seeds {
            let mut rng = CounterRng::new(5000 + (i * seeds + seed) as u64, 0);
            let speech = synthetic_gamma_speech(&mut rng, n);
            let noise: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            let mixed = AudioBuffer::new(mix_at(&speech, &noise, truth), 24000);
            estimates.push(estimate_snr(&mixed, table).expect("estimate").snr_db);
        }
        estimates.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = estimates[seeds / 2];
        worst_median_error = worst_median_error.max((median - truth).abs());
        assert!(
            (median - truth).abs() <= 1.5,
            "median {median} at true {truth} dB"
        );
        means.push(estimates.iter().sum::<f64>() / seeds as f64);
    }
    for pair in means.windows(2) {
        assert!(
            pair[1] > pair[0],
            "seed-averaged curve not strictly monotone: {means:?}"
        );
    }
    println!(
        "acceptance 2 wada-self-consistency: PASS (worst |median - truth| = {worst_median_error:.3} dB over 0..30 dB, 50 seeds each; mean curve strictly monotone)"
    );
}

/// Criterion 3: WADA scale invariance across 20 synthetic files for gains
/// {0.1, 0.5, 2.0}. Power-of-two gains must not move the estimate at all;
/// gain 0.1 rounds the samples themselves, so its budget is 1e-9 dB.
#[test]
fn acceptance_3_wada_scale_invariance() {
    let table = GainTable::default_table();
    let mut max_pow2 = 0.0f64;
    let mut max_rounded = 0.0f64;
    for file in 0..20 {
        let mut rng = CounterRng::new(7000 + file, 0);
        let speech = synthetic_gamma_speech(&mut rng, 16_384);
        let noise: Vec<f64> = (0..16_384).map(|_| rng.normal()).collect();
        let snr = rng.range_f64(0.0, 30.0);
        let buffer = AudioBuffer::new(mix_at(&speech, &noise, snr), 24000);
        let base = estimate_snr(&buffer, table).expect("estimate").snr_db;
        for gain in [0.1, 0.5, 2.0] {
            let scaled = AudioBuffer::new(
                buffer.samples.iter().map(|s| s * gain).collect(),
                buffer.sample_rate,
            );
            let est = estimate_snr(&scaled, table).expect("estimate").snr_db;
            let delta = (est - base).abs();
            if gain == 0.1 {
                max_rounded = max_rounded.max(delta);
            } else {
                max_pow2 = max_pow2.max(delta);
            }
        }
    }
    assert_eq!(max_pow2, 0.0, "power-of-two gains must be exact");
    assert!(
        max_rounded <= 1e-9,
        "gain 0.1 moved estimates by {max_rounded}"
    );
    println!(
        "acceptance 3 wada-scale-invariance: PASS (gains 0.5/2.0 exact; gain 0.1 max delta {max_rounded:.2e} dB over 20 files)"
    );
}

/// Criterion 4: CTC oracle equivalence. 500 random feasible problems with
/// T <= 6, V <= 3, L <= 3 match exhaustive enumeration within 1e-10
/// relative; 100 gradient checks pass central finite differences within
/// 1e-5 absolute.
#[test]
fn acceptance_4_ctc_oracles() {
    let enumeration = checks::check_ctc_against_enumeration(500, 404);
    assert!(enumeration.passed, "{}", enumeration.detail);
    let gradient = checks::check_ctc_gradient(100, 404);
    assert!(gradient.passed, "{}", gradient.detail);
    println!(
        "acceptance 4 ctc-oracles: PASS (500 problems vs enumeration: {}; 100 gradient checks: {})",
        enumeration.detail, gradient.detail
    );
}

/// Criterion 5: KL correctness. Closed form matches 1e6-sample Monte-Carlo
/// within 1% on 20 random 8-dim posteriors; non-negative on 1e4 random
/// posteriors; exactly zero at the prior.
#[test]
fn acceptance_5_kl_correctness() {
    let monte_carlo = checks::check_kl_monte_carlo(20, 1_000_000, 505);
    assert!(monte_carlo.passed, "{}", monte_carlo.detail);
    let nonnegative = checks::check_kl_nonnegative(10_000, 505);
    assert!(nonnegative.passed, "{}", nonnegative.detail);
    println!(
        "acceptance 5 kl-correctness: PASS (20x 1e6-sample MC: {}; 1e4 posteriors: {})",
        monte_carlo.detail, nonnegative.detail
    );
}

fn random_track(rng: &mut CounterRng, n: usize) -> PitchTrack {
    let voiced: Vec<bool> = (0..n).map(|_| !rng.next_u64().is_multiple_of(3)).collect();
    let f0: Vec<f64> = voiced
        .iter()
        .map(|&v| if v { rng.range_f64(60.0, 400.0) } else { 0.0 })
        .collect();
    PitchTrack {
        correlation: vec![0.5; n],
        f0_hz: f0,
        voiced,
        geometry: FrameGeometry::default(),
    }
}

/// Criterion 6: metric identities. The FFE count identity holds exactly on
/// 100 random synthetic track pairs; DTW MCD equals brute-force search for
/// every shape with T <= 5; gain changes (c0-only shifts) score zero MCD
/// within 1e-6.
#[test]
fn acceptance_6_metric_identities() {
    // FFE count identity: ffe*N = vde*N + gpe*n_both_voiced, exactly.
    let mut rng = CounterRng::new(606, 0);
    for _ in 0..100 {
        let n = 1 + rng.below(60) as usize;
        let reference = random_track(&mut rng, n);
        let candidate = random_track(&mut rng, n);
        let m = pitch_metrics(&reference, &candidate, 0.2).expect("metrics");
        assert_eq!(
            m.n_voicing_errors + m.n_gross_pitch_errors,
            (m.ffe * m.n_frames as f64).round() as usize
        );
        let lhs = m.ffe * m.n_frames as f64;
        let rhs = m.vde * m.n_frames as f64 + m.gpe * m.n_both_voiced as f64;
        assert!(
            (lhs - rhs).abs() < 1e-9,
            "float identity: {lhs} vs {rhs} (counts {} {} {})",
            m.n_voicing_errors,
            m.n_gross_pitch_errors,
            m.n_both_voiced
        );
    }

    // Brute-force DTW equivalence on every T <= 5 shape.
    let geometry = FrameGeometry::default();
    let mut max_dtw_gap = 0.0f64;
    for t_ref in 1..=5usize {
        for t_cand in 1..=5usize {
            for _trial in 0..4 {
                let rows_a: Vec<Vec<f64>> = (0..t_ref)
                    .map(|_| (0..8).map(|_| rng.range_f64(-2.0, 2.0)).collect())
                    .collect();
                let rows_b: Vec<Vec<f64>> = (0..t_cand)
                    .map(|_| (0..8).map(|_| rng.range_f64(-2.0, 2.0)).collect())
                    .collect();
                let a = FeatureSequence::from_rows(FeatureKind::BarkCepstra20, geometry, rows_a);
                let b = FeatureSequence::from_rows(FeatureKind::BarkCepstra20, geometry, rows_b);
                let fast = mcd(&a, &b, Alignment::Dtw).expect("dtw");
                let brute = metric_checks::brute_force_mcd_dtw(&a, &b);
                let gap = (fast - brute).abs() / brute.abs().max(1.0);
                max_dtw_gap = max_dtw_gap.max(gap);
                assert!(gap <= 1e-12, "dtw {fast} vs brute {brute}");
            }
        }
    }

    // Gain invariance through the full feature path: scaling audio by 0.5
    // moves only c0, which MCD excludes.
    let buffer = speech_like(607, 24_000, 24000);
    let halved = AudioBuffer::new(buffer.samples.iter().map(|s| s * 0.5).collect(), 24000);
    let cepstra_full = bark_cepstra(&buffer, &geometry).expect("features");
    let cepstra_half = bark_cepstra(&halved, &geometry).expect("features");
    let gain_mcd = mcd(&cepstra_full, &cepstra_half, Alignment::None).expect("mcd");
    assert!(gain_mcd <= 1e-6, "gain-invariance mcd {gain_mcd}");

    println!(
        "acceptance 6 metric-identities: PASS (FFE identity exact on 100 pairs; DTW vs brute force max rel gap {max_dtw_gap:.2e} over all T<=5 shapes; gain-change MCD {gain_mcd:.2e} dB)"
    );
}

/// Criterion 7: schedule endpoints. pooling(0) = 1, pooling(end) = 0,
/// monotone non-increasing on a dense sweep; learning_rate(0) = 3e-3 and
/// learning_rate(100000) = 3e-5, exactly.
#[test]
fn acceptance_7_schedule_endpoints() {
    let schedule = PoolingSchedule::new(0, 25_000).expect("schedule");
    assert_eq!(pooling_probability(0, &schedule), 1.0);
    assert_eq!(pooling_probability(25_000, &schedule), 0.0);
    let mut last = f64::INFINITY;
    for step in 0..30_000 {
        let p = pooling_probability(step, &schedule);
        assert!(p <= last, "pooling rose at step {step}");
        last = p;
    }
    assert_eq!(learning_rate(0), 3e-3);
    assert_eq!(learning_rate(100_000), 3e-5);
    println!(
        "acceptance 7 schedule-endpoints: PASS (pooling 1 -> 0 monotone over a dense sweep; lr endpoints exact at 3e-3 and 3e-5)"
    );
}

/// Criterion 8: determinism under parallelism. `analyze`, `augment`,
/// `features`, and `eval` produce byte-identical outputs for workers
/// {1, 4, 8} on a 50-file synthetic corpus.
#[test]
fn acceptance_8_determinism_under_parallelism() {
    let dir = tempfile::tempdir().expect("tempdir");
    let speech_dir = dir.path().join("speech");
    let noise_dir = dir.path().join("noise");
    std::fs::create_dir_all(&speech_dir).expect("mkdir");
    std::fs::create_dir_all(&noise_dir).expect("mkdir");
    for i in 0..50 {
        write_wav(
            &speech_dir,
            &format!("utt{i:02}.wav"),
            &speech_like(800 + i, 24_000, 24000),
        );
    }
    for i in 0..3 {
        write_wav(
            &noise_dir,
            &format!("noise{i}.wav"),
            &white_noise(900 + i, 48_000, 24000, 0.3),
        );
    }
    // Candidates for eval: the same corpus augmented once.
    let table_path = dir.path().join("table.json");
    GainTable::build(1, 100_000)
        .save_json(&table_path)
        .expect("cache table");

    let bin = env!("CARGO_BIN_EXE_noisekit");
    let speech = speech_dir.display().to_string();
    let noise = noise_dir.display().to_string();
    let table = table_path.display().to_string();

    let cand_dir = dir.path().join("cand");
    let status = Command::new(bin)
        .args([
            "augment",
            "--speech",
            &speech,
            "--noise",
            &noise,
            "--seed",
            "11",
            "--output",
            &cand_dir.display().to_string(),
        ])
        .status()
        .expect("run augment");
    assert!(status.success());

    let out = dir.path().join("out");
    let out_str = out.display().to_string();
    let cand = cand_dir.display().to_string();
    let commands: Vec<(&str, Vec<String>)> = vec![
        (
            "analyze",
            vec![
                "analyze".into(),
                speech.clone(),
                "--table".into(),
                table.clone(),
                "--output".into(),
                out_str.clone(),
            ],
        ),
        (
            "augment",
            vec![
                "augment".into(),
                "--speech".into(),
                speech.clone(),
                "--noise".into(),
                noise.clone(),
                "--seed".into(),
                "22".into(),
                "--output".into(),
                out_str.clone(),
            ],
        ),
        (
            "features",
            vec![
                "features".into(),
                speech.clone(),
                "--output".into(),
                out_str.clone(),
            ],
        ),
        (
            "eval",
            vec![
                "eval".into(),
                "--ref".into(),
                speech.clone(),
                "--cand".into(),
                cand.clone(),
                "--output".into(),
                out_str.clone(),
            ],
        ),
    ];

    for (name, base_args) in &commands {
        let mut snapshots = Vec::new();
        for workers in ["1", "4", "8"] {
            clear_dir(&out);
            let status = Command::new(bin)
                .args(base_args)
                .args(["--workers", workers])
                .status()
                .unwrap_or_else(|e| panic!("run {name}: {e}"));
            assert!(status.success(), "{name} with {workers} workers failed");
            snapshots.push(snapshot_dir(&out));
        }
        assert!(!snapshots[0].is_empty(), "{name} wrote nothing");
        assert_eq!(snapshots[0], snapshots[1], "{name}: workers 1 vs 4 differ");
        assert_eq!(snapshots[1], snapshots[2], "{name}: workers 4 vs 8 differ");
    }
    println!(
        "acceptance 8 determinism-under-parallelism: PASS (analyze/augment/features/eval byte-identical at workers 1, 4, 8 on a 50-file corpus)"
    );
}

/// Criterion 9: end-to-end noise visibility. A clean synthetic corpus
/// versus the same corpus augmented at 5-25 dB shows a mean WADA estimate
/// drop of at least 10 dB.
#[test]
fn acceptance_9_noise_visibility() {
    let table = GainTable::default_table();
    let dir = tempfile::tempdir().expect("tempdir");
    let clean_dir = dir.path().join("clean");
    let noise_dir = dir.path().join("noise");
    std::fs::create_dir_all(&clean_dir).expect("mkdir");
    std::fs::create_dir_all(&noise_dir).expect("mkdir");
    let files = 30;
    for i in 0..files {
        write_wav(
            &clean_dir,
            &format!("utt{i:02}.wav"),
            &gamma_speech(980 + i, 16_384, 24000),
        );
    }
    // Gaussian background noise, which is what the estimator models.
    for i in 0..2 {
        let mut rng = CounterRng::new(995 + i, 0);
        let samples: Vec<f64> = (0..48_000).map(|_| 0.05 * rng.normal()).collect();
        write_wav(
            &noise_dir,
            &format!("n{i}.wav"),
            &AudioBuffer::new(samples, 24000),
        );
    }

    let clean_paths: Vec<std::path::PathBuf> = (0..files)
        .map(|i| clean_dir.join(format!("utt{i:02}.wav")))
        .collect();
    let noise_paths = vec![noise_dir.join("n0.wav"), noise_dir.join("n1.wav")];
    let job = noisekit::pipeline::AugmentJob {
        snr_range_db: (5.0, 25.0),
        seed: 99,
        ..Default::default()
    };
    let augmented_dir = dir.path().join("augmented");
    let report =
        noisekit::pipeline::run_augment(&clean_paths, &noise_paths, &job, &augmented_dir, 4)
            .expect("augment");
    assert_eq!(report.records.len(), files as usize);

    let mean_of = |paths: &[std::path::PathBuf]| -> f64 {
        let values: Vec<f64> = paths
            .iter()
            .map(|p| {
                let buffer = noisekit::audio::load_wav(p).expect("load");
                estimate_snr(&buffer, table).expect("estimate").snr_db
            })
            .collect();
        values.iter().sum::<f64>() / values.len() as f64
    };
    let clean_mean = mean_of(&clean_paths);
    let augmented_paths: Vec<std::path::PathBuf> = report
        .records
        .iter()
        .map(|r| Path::new(&r.output_path).to_path_buf())
        .collect();
    let augmented_mean = mean_of(&augmented_paths);
    let drop = clean_mean - augmented_mean;
    assert!(
        drop >= 10.0,
        "mean WADA only dropped {drop:.2} dB (clean {clean_mean:.2}, augmented {augmented_mean:.2})"
    );
    println!(
        "acceptance 9 noise-visibility: PASS (mean WADA {clean_mean:.1} dB clean vs {augmented_mean:.1} dB augmented at 5-25 dB; drop {drop:.1} dB >= 10 dB)"
    );
}
