//! Frame-level residual latent sequences and utterance-level mean pooling.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LatentError {
    #[error("latent sequence has no frames")]
    Empty,
    #[error("latent width must be at least 1")]
    ZeroWidth,
    #[error("row {row} has {got} dims, expected {expected}")]
    Ragged {
        row: usize,
        got: usize,
        expected: usize,
    },
}

/// A T x R matrix of residual latents. The bottleneck default is R = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualLatentSequence {
    values: Vec<f64>,
    t: usize,
    r: usize,
}

impl ResidualLatentSequence {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<ResidualLatentSequence, LatentError> {
        if rows.is_empty() {
            return Err(LatentError::Empty);
        }
        let r = rows[0].len();
        if r == 0 {
            return Err(LatentError::ZeroWidth);
        }
        let mut values = Vec::with_capacity(rows.len() * r);
        for (row, data) in rows.iter().enumerate() {
            if data.len() != r {
                return Err(LatentError::Ragged {
                    row,
                    got: data.len(),
                    expected: r,
                });
            }
            values.extend_from_slice(data);
        }
        Ok(ResidualLatentSequence {
            values,
            t: rows.len(),
            r,
        })
    }

    /// Single-dimension (R = 1) convenience constructor.
    pub fn scalar(values: Vec<f64>) -> Result<ResidualLatentSequence, LatentError> {
        if values.is_empty() {
            return Err(LatentError::Empty);
        }
        let t = values.len();
        Ok(ResidualLatentSequence { values, t, r: 1 })
    }

    pub fn n_frames(&self) -> usize {
        self.t
    }

    pub fn width(&self) -> usize {
        self.r
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        &self.values[t * self.r..(t + 1) * self.r]
    }
}

/// Utterance-to-frame switch: with `pooled` the whole sequence collapses
/// to its temporal mean broadcast over every frame (utterance-level mode);
/// without, the input passes through untouched (frame-level mode).
pub fn apply_pooling(latents: &ResidualLatentSequence, pooled: bool) -> ResidualLatentSequence {
    if !pooled {
        return latents.clone();
    }
    let (t, r) = (latents.t, latents.r);
    let mut mean = vec![0.0; r];
    for frame in 0..t {
        for (d, m) in mean.iter_mut().enumerate() {
            *m += latents.values[frame * r + d];
        }
    }
    for m in mean.iter_mut() {
        *m /= t as f64;
    }
    let mut values = Vec::with_capacity(t * r);
    for _ in 0..t {
        values.extend_from_slice(&mean);
    }
    ResidualLatentSequence { values, t, r }
}
