//! Orthonormal DCT-II and its inverse.

/// DCT-II with orthonormal scaling: `y[k] = s_k * sum_j x[j] cos(pi (j+0.5) k / N)`
/// where `s_0 = sqrt(1/N)` and `s_k = sqrt(2/N)` otherwise.
pub fn dct_ii_orthonormal(input: &[f64]) -> Vec<f64> {
    let n = input.len();
    assert!(n > 0, "dct of empty input");
    let mut out = vec![0.0; n];
    for (k, slot) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, &x) in input.iter().enumerate() {
            acc += x * (std::f64::consts::PI * (j as f64 + 0.5) * k as f64 / n as f64).cos();
        }
        let scale = if k == 0 {
            (1.0 / n as f64).sqrt()
        } else {
            (2.0 / n as f64).sqrt()
        };
        *slot = scale * acc;
    }
    out
}

/// Inverse of [`dct_ii_orthonormal`] (orthonormal DCT-III).
pub fn dct_iii_orthonormal(input: &[f64]) -> Vec<f64> {
    let n = input.len();
    assert!(n > 0, "inverse dct of empty input");
    let mut out = vec![0.0; n];
    for (j, slot) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (k, &y) in input.iter().enumerate() {
            let scale = if k == 0 {
                (1.0 / n as f64).sqrt()
            } else {
                (2.0 / n as f64).sqrt()
            };
            acc +=
                scale * y * (std::f64::consts::PI * (j as f64 + 0.5) * k as f64 / n as f64).cos();
        }
        *slot = acc;
    }
    out
}
