//! Annealing schedules: the utterance-to-frame pooling probability and the
//! linear learning-rate decay.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("start_step {start} must not exceed end_step {end}")]
    Inverted { start: u64, end: u64 },
}

/// Linear decay window for the mean-pooling probability: 1 until
/// `start_step`, 0 from `end_step` on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolingSchedule {
    pub start_step: u64,
    pub end_step: u64,
}

impl PoolingSchedule {
    pub fn new(start_step: u64, end_step: u64) -> Result<PoolingSchedule, ScheduleError> {
        if start_step > end_step {
            return Err(ScheduleError::Inverted {
                start: start_step,
                end: end_step,
            });
        }
        Ok(PoolingSchedule {
            start_step,
            end_step,
        })
    }
}

/// Probability of replacing the frame-level latent sequence with its mean:
/// starts at 1, decays linearly to 0 between the schedule's endpoints.
pub fn pooling_probability(step: u64, schedule: &PoolingSchedule) -> f64 {
    if step <= schedule.start_step {
        1.0
    } else if step >= schedule.end_step {
        0.0
    } else {
        let span = (schedule.end_step - schedule.start_step) as f64;
        let progress = (step - schedule.start_step) as f64 / span;
        1.0 - progress
    }
}

pub const LR_INITIAL: f64 = 3e-3;
pub const LR_FINAL: f64 = 3e-5;
pub const LR_DECAY_STEPS: u64 = 100_000;

/// Learning rate: linear from 3e-3 at step 0 down to 3e-5 at step 100000,
/// constant afterwards. The endpoints are returned exactly.
pub fn learning_rate(step: u64) -> f64 {
    if step >= LR_DECAY_STEPS {
        return LR_FINAL;
    }
    if step == 0 {
        return LR_INITIAL;
    }
    let progress = step as f64 / LR_DECAY_STEPS as f64;
    (1.0 - progress) * LR_INITIAL + progress * LR_FINAL
}
