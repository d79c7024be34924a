//! Spectral-clipping optimization toolkit.
//!
//! The crate is organized in four layers:
//!
//! * [`linalg`]: dense matrix helpers, compact SVD, exact and soft spectral
//!   clipping (including the Newton-Schulz inverse-square-root path),
//!   subspace distances, and uniform Stiefel sampling.
//! * [`optim`]: base optimizer updates (SGD with momentum, Signum, AdamW,
//!   AdEMAMix), learning-rate and clipping-threshold schedules, and the
//!   spectrally-clipped wrapper step.
//! * [`fw`]: composite Frank-Wolfe over the spectral-norm ball, the LMO
//!   family for spectral regularizers, and the equivalence between the
//!   clipped update rule and the Frank-Wolfe reformulation.
//! * [`synth`]: synthetic matrix logistic-regression generators with exact
//!   smoothness bounds and a spike-noise stochastic gradient oracle.

pub mod error;
pub mod fw;
pub mod linalg;
pub mod optim;
pub mod synth;

pub use error::{Error, Result};
