//! Speech-corpus noise toolkit.
//!
//! A library and CLI for working with noisy speech corpora:
//!
//! - blind SNR estimation by waveform amplitude distribution analysis
//!   ([`wada`]),
//! - mixing background noise into speech at an exact target SNR, over the
//!   whole utterance or a sub-region ([`augment`]),
//! - the acoustic feature front-end: 80-dim log-mel filterbank frames and
//!   20 bark-scale cepstral coefficients plus a pitch track ([`spectral`],
//!   [`pitch`]),
//! - reconstruction metrics: MCD with optional DTW alignment, and the
//!   GPE / VDE / FFE pitch-error suite ([`metrics`]),
//! - reference training-math kernels: CTC loss with gradients, the
//!   diagonal-Gaussian KL term, and annealing schedules ([`train_math`]).
//!
//! All numerics are f64 and deterministic: randomness flows from a single
//! 64-bit seed through a splittable counter-based generator ([`rng`]), so
//! parallel corpus runs are bit-reproducible at any worker count.

pub mod audio;
pub mod augment;
pub mod metrics;
pub mod pipeline;
pub mod pitch;
pub mod rng;
pub mod spectral;
pub mod train_math;
pub mod wada;

pub use audio::{load_wav, save_wav, AudioBuffer, WavEncoding};
pub use spectral::{bark_cepstra, mel_features, FeatureKind, FeatureSequence, FrameGeometry};
