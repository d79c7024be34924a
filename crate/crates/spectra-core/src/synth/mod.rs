//! Synthetic matrix logistic-regression problems, their loss/gradient
//! oracles and smoothness bounds, the spike-noise stochastic gradient
//! model, and a binary dataset container for reproducible runs.

pub mod io;
pub mod logistic;
pub mod noise;

pub use io::{dump_dataset, load_dataset};
pub use logistic::{
    gen_weight_reg_dataset, grad, loss, smoothness_bounds, test_loss, LogisticProblem,
    SmoothnessBounds,
};
pub use noise::{
    signal_noise_decompose, spike_noise, spike_noisy_grad, NoiseSampleRecord, SpikeNoiseSpec,
};
