//! Independent reference implementations and the self-test suites built
//! on them. They validate the fast kernels by entirely different routes:
//! exhaustive path enumeration against the CTC recursion, central finite
//! differences against the CTC gradient, and Monte-Carlo sampling against
//! the closed-form KL.

use crate::rng::CounterRng;

use super::ctc::{ctc_loss, CtcError, CtcProblem};
use super::gaussian::{kl_to_standard_normal, GaussianPosterior};
use super::schedule::{learning_rate, pooling_probability, PoolingSchedule};

/// Brute-force CTC: sums `exp(sum of log-probs)` over every path whose
/// blank-collapse equals the labels. Exponential in T; intended for the
/// tiny instances the checks use.
pub fn enumerate_ctc_loss(problem: &CtcProblem) -> Result<f64, CtcError> {
    let t_len = problem.n_frames();
    let classes = problem.n_classes();
    let blank = problem.blank();
    let mut total = 0.0f64;
    let n_paths = (classes as u64).checked_pow(t_len as u32).expect("tiny T");
    assert!(n_paths <= 1 << 24, "enumeration is for tiny problems");
    let mut path = vec![0usize; t_len];
    for code in 0..n_paths {
        let mut c = code;
        for slot in path.iter_mut() {
            *slot = (c % classes as u64) as usize;
            c /= classes as u64;
        }
        // Collapse: drop repeats, then blanks.
        let mut collapsed = Vec::with_capacity(t_len);
        let mut prev = usize::MAX;
        for &k in &path {
            if k != prev && k != blank {
                collapsed.push(k);
            }
            prev = k;
        }
        if collapsed == problem.labels() {
            let log_p: f64 = path
                .iter()
                .enumerate()
                .map(|(t, &k)| problem.log_prob(t, k))
                .sum();
            total += log_p.exp();
        }
    }
    if total <= 0.0 {
        return Err(CtcError::ZeroProbability);
    }
    Ok(-total.ln())
}

/// Central finite difference of the CTC loss with respect to each
/// log-probability entry, re-normalizing the perturbed row (subtracting
/// its log-sum-exp) before evaluating.
pub fn finite_difference_grad(problem: &CtcProblem, h: f64) -> Result<Vec<f64>, CtcError> {
    let t_len = problem.n_frames();
    let classes = problem.n_classes();
    let rows: Vec<Vec<f64>> = (0..t_len)
        .map(|t| (0..classes).map(|k| problem.log_prob(t, k)).collect())
        .collect();
    let labels = problem.labels().to_vec();

    let eval = |rows: &[Vec<f64>]| -> Result<f64, CtcError> {
        Ok(ctc_loss(&CtcProblem::new(rows, &labels)?)?.loss)
    };
    let renormalize = |row: &mut Vec<f64>| {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        for v in row.iter_mut() {
            *v -= lse;
        }
    };

    let mut grad = vec![0.0; t_len * classes];
    for t in 0..t_len {
        for k in 0..classes {
            let mut plus = rows.clone();
            plus[t][k] += h;
            renormalize(&mut plus[t]);
            let mut minus = rows.clone();
            minus[t][k] -= h;
            renormalize(&mut minus[t]);
            grad[t * classes + k] = (eval(&plus)? - eval(&minus)?) / (2.0 * h);
        }
    }
    Ok(grad)
}

/// Monte-Carlo estimate of `KL(q || N(0, I))` by sampling from q:
/// the mean of `ln q(z) - ln p(z) = (z^2 - eps^2 - log_var) / 2` summed
/// over dimensions.
pub fn monte_carlo_kl(posterior: &GaussianPosterior, samples: usize, rng: &mut CounterRng) -> f64 {
    let dims = posterior.dim();
    let mut acc = 0.0;
    for _ in 0..samples {
        let mut term = 0.0;
        for d in 0..dims {
            let eps = rng.normal();
            let sigma = (0.5 * posterior.log_variance[d]).exp();
            let z = posterior.mean[d] + sigma * eps;
            term += z * z - eps * eps - posterior.log_variance[d];
        }
        acc += 0.5 * term;
    }
    acc / samples as f64
}

/// Draws a feasible random CTC problem with `T <= max_t`, vocabulary
/// `V <= max_v`, and `L <= max_l`.
pub fn random_ctc_problem(
    rng: &mut CounterRng,
    max_t: usize,
    max_v: usize,
    max_l: usize,
) -> CtcProblem {
    loop {
        let t = 1 + rng.below(max_t as u64) as usize;
        let v = 1 + rng.below(max_v as u64) as usize;
        let l = rng.below((max_l + 1) as u64) as usize;
        let labels: Vec<usize> = (0..l).map(|_| rng.below(v as u64) as usize).collect();
        let rows: Vec<Vec<f64>> = (0..t)
            .map(|_| {
                let logits: Vec<f64> = (0..=v).map(|_| rng.range_f64(-2.0, 2.0)).collect();
                let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lse = max + logits.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
                logits.iter().map(|x| x - lse).collect()
            })
            .collect();
        let problem = CtcProblem::new(&rows, &labels).expect("constructed rows are normalized");
        if problem.min_frames() <= t {
            return problem;
        }
    }
}

/// Outcome of one self-test suite.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn bounded(name: &'static str, max_error: f64, bound: f64) -> CheckOutcome {
        CheckOutcome {
            name,
            passed: max_error <= bound,
            detail: format!("max error {max_error:.3e} (bound {bound:.0e})"),
        }
    }
}

/// CTC loss vs exhaustive enumeration on random tiny problems;
/// relative tolerance 1e-10.
pub fn check_ctc_against_enumeration(n_problems: usize, seed: u64) -> CheckOutcome {
    let mut rng = CounterRng::new(seed, 1);
    let mut max_rel = 0.0f64;
    for _ in 0..n_problems {
        let problem = random_ctc_problem(&mut rng, 6, 3, 3);
        let fast = ctc_loss(&problem).expect("feasible by construction").loss;
        let brute = enumerate_ctc_loss(&problem).expect("feasible by construction");
        max_rel = max_rel.max((fast - brute).abs() / brute.abs().max(1e-300));
    }
    CheckOutcome::bounded("ctc loss vs path enumeration", max_rel, 1e-10)
}

/// CTC gradient vs central finite differences (h = 1e-5); absolute
/// tolerance 1e-5.
pub fn check_ctc_gradient(n_problems: usize, seed: u64) -> CheckOutcome {
    let mut rng = CounterRng::new(seed, 2);
    let mut max_abs = 0.0f64;
    for _ in 0..n_problems {
        let problem = random_ctc_problem(&mut rng, 6, 3, 3);
        let analytic = ctc_loss(&problem).expect("feasible").grad;
        let numeric = finite_difference_grad(&problem, 1e-5).expect("feasible");
        for (a, n) in analytic.iter().zip(&numeric) {
            max_abs = max_abs.max((a - n).abs());
        }
    }
    CheckOutcome::bounded("ctc gradient vs finite differences", max_abs, 1e-5)
}

/// Closed-form KL vs Monte-Carlo on random posteriors; relative
/// tolerance 1%.
pub fn check_kl_monte_carlo(n_posteriors: usize, samples: usize, seed: u64) -> CheckOutcome {
    let mut rng = CounterRng::new(seed, 3);
    let mut max_rel = 0.0f64;
    for _ in 0..n_posteriors {
        let mean: Vec<f64> = (0..8).map(|_| rng.range_f64(-1.5, 1.5)).collect();
        let log_var: Vec<f64> = (0..8).map(|_| rng.range_f64(-1.0, 1.0)).collect();
        let posterior = GaussianPosterior::new(mean, log_var).expect("valid");
        let exact = kl_to_standard_normal(&posterior);
        let estimate = monte_carlo_kl(&posterior, samples, &mut rng);
        max_rel = max_rel.max((exact - estimate).abs() / exact.abs().max(1e-300));
    }
    CheckOutcome::bounded("kl closed form vs monte carlo", max_rel, 0.01)
}

/// KL non-negativity over random posteriors, plus exactness at the prior.
pub fn check_kl_nonnegative(n: usize, seed: u64) -> CheckOutcome {
    let mut rng = CounterRng::new(seed, 4);
    let mut min_kl = f64::INFINITY;
    for _ in 0..n {
        let dims = 1 + rng.below(16) as usize;
        let mean: Vec<f64> = (0..dims).map(|_| rng.range_f64(-3.0, 3.0)).collect();
        let log_var: Vec<f64> = (0..dims).map(|_| rng.range_f64(-3.0, 3.0)).collect();
        let posterior = GaussianPosterior::new(mean, log_var).expect("valid");
        min_kl = min_kl.min(kl_to_standard_normal(&posterior));
    }
    let at_prior =
        kl_to_standard_normal(&GaussianPosterior::new(vec![0.0; 4], vec![0.0; 4]).expect("valid"));
    CheckOutcome {
        name: "kl non-negativity and zero at the prior",
        passed: min_kl >= 0.0 && at_prior == 0.0,
        detail: format!("min KL {min_kl:.3e}, KL at prior {at_prior:e}"),
    }
}

/// Schedule endpoints and monotonicity.
pub fn check_schedules() -> CheckOutcome {
    let schedule = PoolingSchedule::new(0, 30_000).expect("valid");
    let mut monotone = true;
    let mut last = f64::INFINITY;
    for step in (0..40_000).step_by(11) {
        let p = pooling_probability(step, &schedule);
        if p > last {
            monotone = false;
        }
        last = p;
    }
    let endpoints_ok = pooling_probability(0, &schedule) == 1.0
        && pooling_probability(30_000, &schedule) == 0.0
        && learning_rate(0) == 3e-3
        && learning_rate(100_000) == 3e-5;
    CheckOutcome {
        name: "schedule endpoints and monotonicity",
        passed: monotone && endpoints_ok,
        detail: format!(
            "pooling(0)={}, pooling(end)={}, lr(0)={:e}, lr(100000)={:e}",
            pooling_probability(0, &schedule),
            pooling_probability(30_000, &schedule),
            learning_rate(0),
            learning_rate(100_000)
        ),
    }
}

/// Runs every kernel self-test at full size.
pub fn run_all(seed: u64) -> Vec<CheckOutcome> {
    vec![
        check_ctc_against_enumeration(500, seed),
        check_ctc_gradient(100, seed),
        check_kl_monte_carlo(20, 1_000_000, seed),
        check_kl_nonnegative(10_000, seed),
        check_schedules(),
    ]
}
