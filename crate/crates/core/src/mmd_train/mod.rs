//! Loader training: Gaussian-kernel MMD in the computational and Hadamard
//! bases, parameter-shift gradients, Adam, and trial selection.

mod adam;
mod cost;
mod gradient;
mod kernel;
mod trainer;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use cost::{exact_cost, mmd_exact, mmd_sampled, state_cost, CostTriple, Objective, TrainingTarget};
pub use gradient::{mmd_gradient, shifted_params, GradientMode};
pub use kernel::{kernel, KernelConfig, KernelTable};
pub use trainer::{select_best_trial, train_encoder, train_trials, BestTrial, LrStage, TrainConfig, TrainRecord};
