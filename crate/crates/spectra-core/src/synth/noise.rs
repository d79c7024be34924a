use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::matrix::{ensure_same_shape, DenseMatrix};
use crate::linalg::stiefel::sample_stiefel;
use crate::linalg::subspace::{subspace_distance, top_r_frames};
use crate::linalg::svd::svd_compact;
use crate::synth::logistic::{grad, LogisticProblem};

/// Spike-noise model: additive `N = ell * U V^T` with fresh independent
/// orthonormal factors, so each draw has `||N||_2 = ell` and
/// `||N||_F = ell sqrt(r)` exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeNoiseSpec {
    pub ell: f64,
    pub rank: usize,
}

impl SpikeNoiseSpec {
    pub fn validate(&self, rows: usize, cols: usize) -> Result<()> {
        if self.ell < 0.0 {
            return Err(Error::InvalidSpec("spike magnitude must be >= 0".into()));
        }
        if self.rank == 0 || self.rank > rows.min(cols) {
            return Err(Error::DimensionMismatch(format!(
                "spike rank {} incompatible with shape {rows}x{cols}",
                self.rank
            )));
        }
        Ok(())
    }
}

/// Draws one spike-noise matrix for the given shape.
pub fn spike_noise(
    rows: usize,
    cols: usize,
    spec: &SpikeNoiseSpec,
    rng: &mut impl Rng,
) -> Result<DenseMatrix> {
    spec.validate(rows, cols)?;
    if spec.ell == 0.0 {
        return Ok(DenseMatrix::zeros(rows, cols));
    }
    let u = sample_stiefel(rows, spec.rank, rng)?.matrix;
    let v = sample_stiefel(cols, spec.rank, rng)?.matrix;
    Ok(u * v.transpose() * spec.ell)
}

/// Stochastic gradient oracle `g(X) = grad f(X) + N`.
pub fn spike_noisy_grad(
    problem: &LogisticProblem,
    x: &DenseMatrix,
    spec: &SpikeNoiseSpec,
    rng: &mut impl Rng,
) -> Result<DenseMatrix> {
    let g = grad(problem, x, None)?;
    let n = spike_noise(g.nrows(), g.ncols(), spec, rng)?;
    Ok(g + n)
}

/// Per-sample spectral structure of the noise relative to the signal.
#[derive(Debug, Clone)]
pub struct NoiseSampleRecord {
    /// Top-r singular values of `N = g - signal`.
    pub top_singular_values: Vec<f64>,
    /// Max over left/right frames of the spectral subspace distance.
    pub d_spec: f64,
    /// Max over left/right frames of the chordal subspace distance.
    pub d_chord: f64,
}

/// Compares each stochastic gradient against the exact signal: extracts
/// the noise matrix, its top-r spectrum, and the worst-case (left vs
/// right) subspace distances to the signal's top-r frames.
pub fn signal_noise_decompose(
    stoch_grads: &[DenseMatrix],
    signal: &DenseMatrix,
    r: usize,
) -> Result<Vec<NoiseSampleRecord>> {
    if r == 0 || r > signal.nrows().min(signal.ncols()) {
        return Err(Error::DimensionMismatch(format!(
            "subspace rank {r} incompatible with shape {}x{}",
            signal.nrows(),
            signal.ncols()
        )));
    }
    let (u_sig, v_sig) = top_r_frames(signal, r)?;
    let mut records = Vec::with_capacity(stoch_grads.len());
    for g in stoch_grads {
        ensure_same_shape(g, signal)?;
        let noise = g - signal;
        let f = svd_compact(&noise)?;
        let (u_n, v_n) = top_r_frames(&noise, r)?;
        let left = subspace_distance(&u_n, &u_sig)?;
        let right = subspace_distance(&v_n, &v_sig)?;
        records.push(NoiseSampleRecord {
            top_singular_values: f.s.iter().take(r).copied().collect(),
            d_spec: left.d_spec.max(right.d_spec),
            d_chord: left.d_chord.max(right.d_chord),
        });
    }
    Ok(records)
}
