//! Matrix operators: the clipping family, Newton-Schulz inverse square
//! root, soft spectral clipping, orthogonalization, subspace distances and
//! Stiefel sampling.

pub mod clip;
pub mod matrix;
pub mod newton_schulz;
pub mod stiefel;
pub mod subspace;
pub mod svd;

pub use clip::{
    coordinate_clip, global_clip, orthogonalize, scalar_clip, scalar_soft_clip,
    spectral_clip_exact, ClipThreshold,
};
pub use matrix::{
    dense_from_rows, ensure_same_shape, entrywise_l1_norm, fro_dot, frobenius_norm, linf_norm,
    spectral_norm, DenseMatrix,
};
pub use newton_schulz::{gershgorin_sq_bound, matrix_inverse_sqrt, soft_spectral_clip};
pub use stiefel::{sample_stiefel, StiefelSample};
pub use subspace::{subspace_distance, top_r_frames, SubspaceDistance};
pub use svd::{svd_compact, SvdFactors};
