//! Shared corpus generators for the integration suites.

// Each integration target compiles this module separately and uses a
// different subset of it.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use noisekit::audio::{save_wav, AudioBuffer, WavEncoding};
use noisekit::rng::CounterRng;
use noisekit::wada::synthetic_gamma_speech;

/// Harmonic tone with vibrato and a low noise floor: enough structure for
/// pitch tracking, enough bandwidth to keep every filter band above the
/// log floor.
pub fn speech_like(seed: u64, n: usize, rate: u32) -> AudioBuffer {
    let mut rng = CounterRng::new(seed, 0);
    let f0 = rng.range_f64(110.0, 240.0);
    let vibrato = rng.range_f64(2.0, 5.0);
    let samples: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / rate as f64;
            let f = f0 * (1.0 + 0.01 * (2.0 * std::f64::consts::PI * vibrato * t).sin());
            let w = 2.0 * std::f64::consts::PI * f * t;
            0.4 * w.sin()
                + 0.2 * (2.0 * w).sin()
                + 0.1 * (3.0 * w).sin()
                + 0.002 * rng.range_f64(-1.0, 1.0)
        })
        .collect();
    AudioBuffer::new(samples, rate)
}

/// Gamma-amplitude synthetic speech scaled to a 0.5 peak: follows the
/// amplitude-distribution model that blind SNR estimation assumes.
pub fn gamma_speech(seed: u64, n: usize, rate: u32) -> AudioBuffer {
    let mut rng = CounterRng::new(seed, 0);
    let raw = synthetic_gamma_speech(&mut rng, n);
    let max = raw.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    AudioBuffer::new(raw.iter().map(|s| 0.5 * s / max).collect(), rate)
}

/// Uniform white noise.
pub fn white_noise(seed: u64, n: usize, rate: u32, amp: f64) -> AudioBuffer {
    let mut rng = CounterRng::new(seed, 0);
    AudioBuffer::new(
        (0..n).map(|_| amp * rng.range_f64(-1.0, 1.0)).collect(),
        rate,
    )
}

pub fn write_wav(dir: &Path, name: &str, buffer: &AudioBuffer) -> PathBuf {
    let path = dir.join(name);
    save_wav(buffer, &path, WavEncoding::Float32).expect("write test wav");
    path
}

/// All files under `dir` (recursively), keyed by path relative to `dir`.
pub fn snapshot_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(current) = stack.pop() {
        for entry in std::fs::read_dir(&current).expect("read dir") {
            let path = entry.expect("dir entry").path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path
                    .strip_prefix(dir)
                    .expect("under root")
                    .to_string_lossy()
                    .into_owned();
                out.insert(rel, std::fs::read(&path).expect("read file"));
            }
        }
    }
    out
}

pub fn clear_dir(dir: &Path) {
    if dir.exists() {
        std::fs::remove_dir_all(dir).expect("clear dir");
    }
}
