use crate::error::{Error, Result};
use crate::linalg::matrix::{frobenius_norm, DenseMatrix};
use crate::linalg::svd::svd_compact;

/// Positive clipping threshold `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipThreshold(f64);

impl ClipThreshold {
    pub fn new(c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "clipping threshold must be positive and finite, got {c}"
            )));
        }
        Ok(Self(c))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// `clip_c(x) = sign(x) * min(|x|, c)`.
pub fn scalar_clip(x: f64, c: ClipThreshold) -> f64 {
    x.clamp(-c.get(), c.get())
}

/// Smooth clip `h_c(x) = x / sqrt(1 + x^2 / c^2)`, odd and strictly inside
/// `(-c, c)`.
pub fn scalar_soft_clip(x: f64, c: ClipThreshold) -> f64 {
    let c = c.get();
    x / (1.0 + (x / c) * (x / c)).sqrt()
}

/// Truncates every singular value of `x` at `c`, keeping the singular
/// vectors. Returns `x` untouched when no singular value exceeds `c`.
///
/// Computed without a full SVD: with the eigendecomposition
/// `x^T x = W diag(lambda) W^T`, the clipped matrix is
/// `x * W diag(min(sigma, c) / sigma) W^T`, which only needs the
/// right singular vectors.
pub fn spectral_clip_exact(x: &DenseMatrix, c: ClipThreshold) -> Result<DenseMatrix> {
    // Vectors: the spectral norm equals the Euclidean norm, so spectral
    // clipping reduces to global clipping.
    if x.nrows() == 1 || x.ncols() == 1 {
        return Ok(global_clip(x, c));
    }
    // Work on the smaller Gram side.
    if x.nrows() < x.ncols() {
        return Ok(spectral_clip_exact(&x.transpose(), c)?.transpose());
    }
    let gram = x.transpose() * x;
    let eig = nalgebra::SymmetricEigen::new(gram);
    let c = c.get();
    if eig.eigenvalues.iter().all(|&l| l <= c * c * (1.0 + 1e-14)) {
        return Ok(x.clone());
    }
    let scales: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&l| {
            let sigma = l.max(0.0).sqrt();
            if sigma > c {
                c / sigma
            } else {
                1.0
            }
        })
        .collect();
    let mut w_scaled = eig.eigenvectors.clone();
    for (j, &s) in scales.iter().enumerate() {
        w_scaled.column_mut(j).scale_mut(s);
    }
    Ok(x * w_scaled * eig.eigenvectors.transpose())
}

/// `clipG_c(x) = min(1, c / ||x||_F) x`; the zero matrix maps to itself.
pub fn global_clip(x: &DenseMatrix, c: ClipThreshold) -> DenseMatrix {
    let norm = frobenius_norm(x);
    if norm <= c.get() {
        x.clone()
    } else {
        x * (c.get() / norm)
    }
}

/// Entry-wise clipping.
pub fn coordinate_clip(x: &DenseMatrix, c: ClipThreshold) -> DenseMatrix {
    x.map(|v| v.clamp(-c.get(), c.get()))
}

const RANK_DEFICIENT_RATIO: f64 = 1e-12;

/// Polar orthogonalization `orth(x) = U V^T`; all singular values of the
/// result are 1.
pub fn orthogonalize(x: &DenseMatrix) -> Result<DenseMatrix> {
    let f = svd_compact(x)?;
    let q = f.rank_q();
    let s_max = f.s[0];
    let s_min = f.s[q - 1];
    if s_max <= 0.0 || s_min <= RANK_DEFICIENT_RATIO * s_max {
        return Err(Error::RankDeficient(if s_max > 0.0 {
            s_min / s_max
        } else {
            0.0
        }));
    }
    Ok(&f.u * f.v.transpose())
}
