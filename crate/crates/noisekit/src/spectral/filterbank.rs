//! Triangular filterbanks on perceptual frequency scales.

/// HTK mel scale: `2595 * log10(1 + f / 700)`.
pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Traunmueller bark scale: `26.81 * f / (1960 + f) - 0.53`.
pub fn hz_to_bark(hz: f64) -> f64 {
    26.81 * hz / (1960.0 + hz) - 0.53
}

pub fn bark_to_hz(bark: f64) -> f64 {
    let y = bark + 0.53;
    1960.0 * y / (26.81 - y)
}

/// A bank of triangular filters over the one-sided power spectrum.
/// Row-major: `weights[f * n_bins + k]` is filter `f`'s weight at bin `k`.
#[derive(Debug, Clone)]
pub struct Filterbank {
    pub n_filters: usize,
    pub n_bins: usize,
    pub weights: Vec<f64>,
}

impl Filterbank {
    pub fn row(&self, f: usize) -> &[f64] {
        &self.weights[f * self.n_bins..(f + 1) * self.n_bins]
    }

    /// Applies the bank to one power spectrum frame.
    pub fn apply(&self, power: &[f64]) -> Vec<f64> {
        assert_eq!(power.len(), self.n_bins);
        (0..self.n_filters)
            .map(|f| {
                self.row(f)
                    .iter()
                    .zip(power)
                    .map(|(w, p)| w * p)
                    .sum::<f64>()
            })
            .collect()
    }

    /// Builds `n_filters` triangles with peaks equally spaced on the warped
    /// scale between 0 Hz and `sample_rate / 2`, evaluated at FFT bin
    /// centers. `to_scale` / `from_scale` define the frequency warp.
    pub fn triangular(
        n_filters: usize,
        fft_size: usize,
        sample_rate: u32,
        to_scale: fn(f64) -> f64,
        from_scale: fn(f64) -> f64,
    ) -> Filterbank {
        assert!(n_filters > 0);
        let n_bins = fft_size / 2 + 1;
        let nyquist = sample_rate as f64 / 2.0;
        let lo = to_scale(0.0);
        let hi = to_scale(nyquist);
        // n_filters triangles need n_filters + 2 edge frequencies.
        let edges: Vec<f64> = (0..n_filters + 2)
            .map(|i| from_scale(lo + (hi - lo) * i as f64 / (n_filters + 1) as f64))
            .collect();

        let mut weights = vec![0.0; n_filters * n_bins];
        for f in 0..n_filters {
            let (left, center, right) = (edges[f], edges[f + 1], edges[f + 2]);
            for k in 0..n_bins {
                let freq = k as f64 * sample_rate as f64 / fft_size as f64;
                let w = if freq <= left || freq >= right {
                    0.0
                } else if freq <= center {
                    (freq - left) / (center - left)
                } else {
                    (right - freq) / (right - center)
                };
                weights[f * n_bins + k] = w;
            }
        }
        Filterbank {
            n_filters,
            n_bins,
            weights,
        }
    }

    pub fn mel(n_filters: usize, fft_size: usize, sample_rate: u32) -> Filterbank {
        Filterbank::triangular(n_filters, fft_size, sample_rate, hz_to_mel, mel_to_hz)
    }

    pub fn bark(n_filters: usize, fft_size: usize, sample_rate: u32) -> Filterbank {
        Filterbank::triangular(n_filters, fft_size, sample_rate, hz_to_bark, bark_to_hz)
    }
}
