//! Training-objective kernels as standalone, oracle-tested numerics:
//! CTC loss with gradients, the diagonal-Gaussian-vs-standard-normal KL
//! term, the utterance-to-frame pooling schedule, and the learning-rate
//! schedule. Everything is pure and deterministic; the stochastic parts
//! of training (Bernoulli pooling draws, optimizers) belong to callers.

mod ctc;
mod gaussian;
mod latent;
mod schedule;

pub mod checks;

pub use ctc::{ctc_loss, CtcError, CtcProblem, CtcResult};
pub use gaussian::{kl_to_standard_normal, GaussianError, GaussianPosterior};
pub use latent::{apply_pooling, LatentError, ResidualLatentSequence};
pub use schedule::{
    learning_rate, pooling_probability, PoolingSchedule, ScheduleError, LR_DECAY_STEPS, LR_FINAL,
    LR_INITIAL,
};
