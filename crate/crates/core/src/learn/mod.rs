//! REINFORCE estimators, ascent rules and the training loop.

mod estimator;
mod optim;
mod train;

pub use estimator::{
    estimate_direction, estimate_from_batch, reinforce, reinforce_extrinsic, reinforce_intrinsic, GradientEstimate,
};
pub use optim::{OptimizerState, Rule};
pub use train::{iteration_seed, train, train_with_observer, TrainLog, TrainOutcome, TrainRecord, TrainSettings};
