//! CTC loss and gradient by the forward-backward algorithm, entirely in
//! log space.
//!
//! The label sequence is augmented with blanks (`- l1 - l2 - ... -`), the
//! forward pass sums path prefixes, the backward pass sums suffixes, and
//! their product yields per-frame label posteriors. The returned gradient
//! is with respect to the log-probabilities under row renormalization,
//! i.e. `exp(log_probs) - posterior`, which is what a central finite
//! difference that re-normalizes each perturbed row measures.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CtcError {
    #[error("log_probs must be a non-empty rectangular T x (V+1) matrix: {0}")]
    BadShape(String),
    #[error("label {label} at position {index} is outside the vocabulary of {vocab}")]
    InvalidLabel {
        index: usize,
        label: usize,
        vocab: usize,
    },
    #[error("row {row} is not log-normalized: log-sum-exp deviates by {deviation:e}")]
    NonNormalizedRow { row: usize, deviation: f64 },
    #[error("no feasible alignment: {t} frames cannot carry {required} augmented positions")]
    InfeasibleLength { t: usize, required: usize },
    #[error("no alignment has non-zero probability")]
    ZeroProbability,
}

/// Row tolerance for `|ln sum(exp(row))|`.
const ROW_NORMALIZATION_TOLERANCE: f64 = 1e-6;

/// A single CTC instance: a T x (V+1) log-probability matrix whose last
/// column is the blank, plus a target label sequence over `0..V`.
#[derive(Debug, Clone, PartialEq)]
pub struct CtcProblem {
    log_probs: Vec<f64>,
    t: usize,
    classes: usize,
    labels: Vec<usize>,
}

impl CtcProblem {
    /// Validates shapes, vocabulary, and per-row normalization.
    pub fn new(rows: &[Vec<f64>], labels: &[usize]) -> Result<CtcProblem, CtcError> {
        if rows.is_empty() {
            return Err(CtcError::BadShape("no rows".into()));
        }
        let classes = rows[0].len();
        if classes < 2 {
            return Err(CtcError::BadShape(format!(
                "need at least one real class plus blank, got {classes} columns"
            )));
        }
        let mut log_probs = Vec::with_capacity(rows.len() * classes);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != classes {
                return Err(CtcError::BadShape(format!(
                    "row {i} has {} columns, expected {classes}",
                    row.len()
                )));
            }
            let deviation = log_sum_exp(row);
            if deviation.abs() > ROW_NORMALIZATION_TOLERANCE {
                return Err(CtcError::NonNormalizedRow { row: i, deviation });
            }
            log_probs.extend_from_slice(row);
        }
        let vocab = classes - 1;
        for (index, &label) in labels.iter().enumerate() {
            if label >= vocab {
                return Err(CtcError::InvalidLabel {
                    index,
                    label,
                    vocab,
                });
            }
        }
        Ok(CtcProblem {
            log_probs,
            t: rows.len(),
            classes,
            labels: labels.to_vec(),
        })
    }

    pub fn n_frames(&self) -> usize {
        self.t
    }

    /// Classes including the blank.
    pub fn n_classes(&self) -> usize {
        self.classes
    }

    pub fn blank(&self) -> usize {
        self.classes - 1
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn log_prob(&self, t: usize, k: usize) -> f64 {
        self.log_probs[t * self.classes + k]
    }

    /// Minimum frame count for a feasible alignment:
    /// `L + number of adjacent repeats`.
    pub fn min_frames(&self) -> usize {
        let repeats = self.labels.windows(2).filter(|w| w[0] == w[1]).count();
        self.labels.len() + repeats
    }
}

/// Loss and gradient, both finite.
#[derive(Debug, Clone, PartialEq)]
pub struct CtcResult {
    /// `-ln p(labels | log_probs)`, non-negative.
    pub loss: f64,
    /// T x (V+1) row-major gradient with respect to the (renormalized)
    /// log-probabilities. Rows sum to zero.
    pub grad: Vec<f64>,
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn lse2(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Forward-backward CTC: returns the negative log-likelihood of the label
/// sequence and its gradient.
pub fn ctc_loss(problem: &CtcProblem) -> Result<CtcResult, CtcError> {
    let t_len = problem.t;
    let classes = problem.classes;
    let blank = problem.blank();
    if problem.min_frames() > t_len {
        return Err(CtcError::InfeasibleLength {
            t: t_len,
            required: problem.min_frames(),
        });
    }

    // Blank-augmented sequence: blank, l1, blank, l2, ..., blank.
    let s_len = 2 * problem.labels.len() + 1;
    let augmented: Vec<usize> = (0..s_len)
        .map(|s| {
            if s % 2 == 0 {
                blank
            } else {
                problem.labels[s / 2]
            }
        })
        .collect();
    // A skip s-2 -> s is allowed when l'_s is a real label different from
    // l'_{s-2}.
    let skip_allowed: Vec<bool> = (0..s_len)
        .map(|s| s >= 2 && augmented[s] != blank && augmented[s] != augmented[s - 2])
        .collect();

    let idx = |t: usize, s: usize| t * s_len + s;
    let neg_inf = f64::NEG_INFINITY;

    // Forward variables include the emission at their own frame.
    let mut alpha = vec![neg_inf; t_len * s_len];
    alpha[idx(0, 0)] = problem.log_prob(0, augmented[0]);
    if s_len > 1 {
        alpha[idx(0, 1)] = problem.log_prob(0, augmented[1]);
    }
    for t in 1..t_len {
        for s in 0..s_len {
            let mut acc = alpha[idx(t - 1, s)];
            if s >= 1 {
                acc = lse2(acc, alpha[idx(t - 1, s - 1)]);
            }
            if skip_allowed[s] {
                acc = lse2(acc, alpha[idx(t - 1, s - 2)]);
            }
            if acc != neg_inf {
                alpha[idx(t, s)] = acc + problem.log_prob(t, augmented[s]);
            }
        }
    }

    let log_p = if s_len > 1 {
        lse2(
            alpha[idx(t_len - 1, s_len - 1)],
            alpha[idx(t_len - 1, s_len - 2)],
        )
    } else {
        alpha[idx(t_len - 1, 0)]
    };
    if log_p == neg_inf {
        return Err(CtcError::ZeroProbability);
    }

    // Backward variables exclude the emission at their own frame.
    let mut beta = vec![neg_inf; t_len * s_len];
    beta[idx(t_len - 1, s_len - 1)] = 0.0;
    if s_len > 1 {
        beta[idx(t_len - 1, s_len - 2)] = 0.0;
    }
    for t in (0..t_len - 1).rev() {
        for s in 0..s_len {
            let mut acc = beta[idx(t + 1, s)] + problem.log_prob(t + 1, augmented[s]);
            if s + 1 < s_len {
                acc = lse2(
                    acc,
                    beta[idx(t + 1, s + 1)] + problem.log_prob(t + 1, augmented[s + 1]),
                );
            }
            if s + 2 < s_len && skip_allowed[s + 2] {
                acc = lse2(
                    acc,
                    beta[idx(t + 1, s + 2)] + problem.log_prob(t + 1, augmented[s + 2]),
                );
            }
            beta[idx(t, s)] = acc;
        }
    }

    // Posterior over augmented positions per frame, folded onto classes:
    // gradient = exp(log_probs) - posterior.
    let mut grad = vec![0.0; t_len * classes];
    for t in 0..t_len {
        let mut posterior = vec![0.0; classes];
        for s in 0..s_len {
            let joint = alpha[idx(t, s)] + beta[idx(t, s)];
            if joint != neg_inf {
                posterior[augmented[s]] += (joint - log_p).exp();
            }
        }
        for k in 0..classes {
            grad[t * classes + k] = problem.log_prob(t, k).exp() - posterior[k];
        }
    }

    Ok(CtcResult { loss: -log_p, grad })
}
