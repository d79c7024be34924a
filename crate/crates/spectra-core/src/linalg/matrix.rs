use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Real dense matrix in double precision, the universal parameter and
/// gradient carrier of this crate.
pub type DenseMatrix = DMatrix<f64>;

/// Builds a matrix from entries given in row-major order, validating shape
/// and finiteness.
pub fn dense_from_rows(rows: usize, cols: usize, data: &[f64]) -> Result<DenseMatrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidSpec(format!(
            "matrix dimensions must be positive, got {rows}x{cols}"
        )));
    }
    if data.len() != rows * cols {
        return Err(Error::ShapeMismatch(format!(
            "expected {} entries for a {rows}x{cols} matrix, got {}",
            rows * cols,
            data.len()
        )));
    }
    ensure_finite_slice(data)?;
    Ok(DMatrix::from_row_slice(rows, cols, data))
}

pub fn ensure_finite(x: &DenseMatrix) -> Result<()> {
    ensure_finite_slice(x.as_slice())
}

fn ensure_finite_slice(data: &[f64]) -> Result<()> {
    if let Some(v) = data.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("entry {v}")));
    }
    Ok(())
}

pub fn ensure_same_shape(a: &DenseMatrix, b: &DenseMatrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} vs {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    Ok(())
}

/// Frobenius inner product `<a, b> = sum_ij a_ij b_ij`.
pub fn fro_dot(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| x * y)
        .sum()
}

pub fn frobenius_norm(x: &DenseMatrix) -> f64 {
    x.norm()
}

/// Largest singular value, computed through the SVD.
pub fn spectral_norm(x: &DenseMatrix) -> f64 {
    // Vector fast path: the spectral norm of a single row/column is its
    // Euclidean norm.
    if x.nrows() == 1 || x.ncols() == 1 {
        return x.norm();
    }
    x.singular_values().max()
}

/// Largest entry magnitude.
pub fn linf_norm(x: &DenseMatrix) -> f64 {
    x.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Entrywise l1 norm `sum_ij |x_ij|`.
pub fn entrywise_l1_norm(x: &DenseMatrix) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}
