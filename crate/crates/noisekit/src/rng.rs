//! Counter-based pseudo-random generation.
//!
//! Every random draw in this crate flows from a single 64-bit seed through
//! [`CounterRng`], a stateless-style generator whose output at position `n`
//! of stream `s` is a pure function of `(seed, s, n)`. Splitting off a
//! sub-stream never touches the parent state, so per-file draws in a
//! parallel driver are identical no matter how work is scheduled.

/// SplitMix64 finalizer: a full-avalanche 64-bit mixing function.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// Splittable counter-based generator.
///
/// The `n`-th output of stream `s` under seed `k` is
/// `mix64(key(k, s) + n * GOLDEN_GAMMA)` where `key` is itself a mixed
/// combination of seed and stream id. Only the counter advances on draws.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    /// Generator for `stream` under `seed`. Stream 0 is the root stream.
    pub fn new(seed: u64, stream: u64) -> Self {
        CounterRng {
            key: mix64(seed ^ mix64(stream.wrapping_mul(GOLDEN_GAMMA) ^ 0x6a09_e667_f3bc_c909)),
            counter: 0,
        }
    }

    /// Derive an independent sub-stream. The child's draws are unrelated to
    /// the parent's position, so splits may happen in any order.
    pub fn split(&self, substream: u64) -> CounterRng {
        CounterRng {
            key: mix64(self.key ^ substream.wrapping_mul(GOLDEN_GAMMA) ^ 0xbb67_ae85_84ca_a73b),
            counter: 0,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let n = self.counter;
        self.counter += 1;
        mix64(self.key.wrapping_add(n.wrapping_mul(GOLDEN_GAMMA)))
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn range_f64(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in [0, n). Uses rejection to avoid modulo bias.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0) is undefined");
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }

    /// Standard normal via Box-Muller (one value per call; the sine branch
    /// is discarded to keep the counter advance uniform).
    pub fn normal(&mut self) -> f64 {
        let u1 = self.next_f64().max(1e-300);
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// Gamma(shape, scale 1) via Marsaglia-Tsang, with the standard
    /// `U^(1/k)` boost for shape < 1.
    pub fn gamma(&mut self, shape: f64) -> f64 {
        assert!(shape > 0.0, "gamma shape must be positive");
        if shape < 1.0 {
            let g = self.gamma(shape + 1.0);
            let u = self.next_f64().max(1e-300);
            return g * u.powf(1.0 / shape);
        }
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let x = self.normal();
            let v = (1.0 + c * x).powi(3);
            if v <= 0.0 {
                continue;
            }
            let u = self.next_f64().max(1e-300);
            if u < 1.0 - 0.0331 * x.powi(4) {
                return d * v;
            }
            if u.ln() < 0.5 * x * x + d * (1.0 - v + v.ln()) {
                return d * v;
            }
        }
    }
}
