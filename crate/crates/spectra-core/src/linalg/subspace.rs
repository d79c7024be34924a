use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::linalg::matrix::DenseMatrix;
use crate::linalg::svd::svd_compact;

/// Spectral (largest principal-angle sine) and chordal (root-mean-square
/// sine) distances between the column spans of two orthonormal frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubspaceDistance {
    pub d_spec: f64,
    pub d_chord: f64,
}

/// Computes both distances from `B = I_r - A A^T` with `A = u1^T u2`:
/// `d_spec = sqrt(lambda_max(B))`, `d_chord = sqrt(trace(B) / r)`.
pub fn subspace_distance(u1: &DenseMatrix, u2: &DenseMatrix) -> Result<SubspaceDistance> {
    if u1.shape() != u2.shape() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            u1.nrows(),
            u1.ncols(),
            u2.nrows(),
            u2.ncols()
        )));
    }
    let r = u1.ncols();
    let a = u1.transpose() * u2;
    let b = DenseMatrix::identity(r, r) - &a * a.transpose();
    let eig = SymmetricEigen::new(b.clone());
    let lambda_max = eig.eigenvalues.iter().fold(0.0_f64, |acc, &v| acc.max(v));
    let trace = b.trace().max(0.0);
    Ok(SubspaceDistance {
        d_spec: lambda_max.max(0.0).sqrt().min(1.0),
        d_chord: (trace / r as f64).sqrt().min(1.0),
    })
}

/// Top-`r` left and right singular frames of a matrix.
pub fn top_r_frames(x: &DenseMatrix, r: usize) -> Result<(DenseMatrix, DenseMatrix)> {
    let q = x.nrows().min(x.ncols());
    if r == 0 || r > q {
        return Err(Error::DimensionMismatch(format!(
            "requested top-{r} subspace of a matrix with min dimension {q}"
        )));
    }
    let f = svd_compact(x)?;
    Ok((
        f.u.columns(0, r).into_owned(),
        f.v.columns(0, r).into_owned(),
    ))
}
