use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::matrix::{ensure_finite, DenseMatrix};

const SVD_MAX_SWEEPS: usize = 200;
// Relative off-diagonal tolerance for declaring a column pair orthogonal.
const JACOBI_TOL: f64 = 1e-14;

/// Compact SVD triple `x = u * diag(s) * v^T` with `u: m x q`, `v: n x q`,
/// `q = min(m, n)` and `s` sorted non-increasing.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: DenseMatrix,
    pub s: Vec<f64>,
    pub v: DenseMatrix,
}

impl SvdFactors {
    pub fn rank_q(&self) -> usize {
        self.s.len()
    }

    /// Rebuilds `u * diag(s) * v^T`.
    pub fn reconstruct(&self) -> DenseMatrix {
        self.reconstruct_with(&self.s)
    }

    /// Rebuilds the matrix with a replacement spectrum, keeping the
    /// singular vectors.
    pub fn reconstruct_with(&self, spectrum: &[f64]) -> DenseMatrix {
        assert_eq!(spectrum.len(), self.s.len());
        let q = self.s.len();
        let mut scaled = self.u.clone();
        for j in 0..q {
            scaled.column_mut(j).scale_mut(spectrum[j]);
        }
        &scaled * self.v.transpose()
    }
}

/// One-sided Jacobi on the tall orientation: right rotations orthogonalize
/// the columns of `b` while `v` accumulates them, so on exit `b = u * diag(s)`
/// and `b_in = u * diag(s) * v^T`.
fn jacobi_orthogonalize(b: &mut DenseMatrix, v: &mut DenseMatrix) -> Result<()> {
    let q = b.ncols();
    for _sweep in 0..SVD_MAX_SWEEPS {
        let mut max_off = 0.0f64;
        for p in 0..q {
            for r in (p + 1)..q {
                let app = b.column(p).dot(&b.column(p));
                let arr = b.column(r).dot(&b.column(r));
                let apr = b.column(p).dot(&b.column(r));
                let denom = (app * arr).sqrt();
                if denom == 0.0 {
                    continue;
                }
                let rel = apr.abs() / denom;
                max_off = max_off.max(rel);
                if rel <= JACOBI_TOL {
                    continue;
                }
                let tau = (arr - app) / (2.0 * apr);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let cos = 1.0 / (1.0 + t * t).sqrt();
                let sin = cos * t;
                for i in 0..b.nrows() {
                    let bip = b[(i, p)];
                    let bir = b[(i, r)];
                    b[(i, p)] = cos * bip - sin * bir;
                    b[(i, r)] = sin * bip + cos * bir;
                }
                for i in 0..q {
                    let vip = v[(i, p)];
                    let vir = v[(i, r)];
                    v[(i, p)] = cos * vip - sin * vir;
                    v[(i, r)] = sin * vip + cos * vir;
                }
            }
        }
        if max_off <= JACOBI_TOL {
            return Ok(());
        }
    }
    Err(Error::ConvergenceFailure(SVD_MAX_SWEEPS))
}

/// Extends `u` (whose first columns are already orthonormal) with canonical
/// basis vectors orthogonalized against everything before them; used for
/// the null directions of rank-deficient inputs.
fn complete_column(u: &mut DenseMatrix, j: usize) {
    let m = u.nrows();
    for basis in 0..m {
        let mut cand = DMatrix::zeros(m, 1);
        cand[(basis, 0)] = 1.0;
        for i in 0..j {
            let proj = u.column(i).dot(&cand.column(0));
            let prev = u.column(i).clone_owned();
            cand.column_mut(0).axpy(-proj, &prev, 1.0);
        }
        let norm = cand.column(0).norm();
        if norm > 0.5 {
            u.column_mut(j).copy_from(&(cand.column(0) / norm));
            return;
        }
    }
    unreachable!("some canonical vector always survives Gram-Schmidt");
}

/// Backward-stable compact SVD with singular values sorted non-increasing.
///
/// Implemented as a one-sided Jacobi iteration: it is slower than a
/// bidiagonalization for large matrices but delivers high relative
/// accuracy even for clustered spectra, which the clipping operators
/// produce constantly.
pub fn svd_compact(x: &DenseMatrix) -> Result<SvdFactors> {
    ensure_finite(x)?;
    let transposed = x.nrows() < x.ncols();
    let mut b = if transposed { x.transpose() } else { x.clone() };
    let q = b.ncols();
    let mut v = DMatrix::identity(q, q);
    jacobi_orthogonalize(&mut b, &mut v)?;

    let norms: Vec<f64> = (0..q).map(|j| b.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let s_max = norms[order[0]];
    let rank_tol = s_max * f64::EPSILON * (b.nrows().max(q) as f64);

    let mut u = DMatrix::zeros(b.nrows(), q);
    let mut v_sorted = DMatrix::zeros(q, q);
    let mut s = Vec::with_capacity(q);
    for (dst, &src) in order.iter().enumerate() {
        let sigma = norms[src];
        s.push(sigma);
        v_sorted.column_mut(dst).copy_from(&v.column(src));
        if sigma > rank_tol {
            u.column_mut(dst).copy_from(&(b.column(src) / sigma));
        } else {
            complete_column(&mut u, dst);
        }
    }
    if transposed {
        Ok(SvdFactors {
            u: v_sorted,
            s,
            v: u,
        })
    } else {
        Ok(SvdFactors { u, s, v: v_sorted })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::dense_from_rows;

    #[test]
    fn diagonal_matrix() {
        let x = dense_from_rows(2, 2, &[3.0, 0.0, 0.0, 1.0]).unwrap();
        let f = svd_compact(&x).unwrap();
        assert!((f.s[0] - 3.0).abs() < 1e-12);
        assert!((f.s[1] - 1.0).abs() < 1e-12);
        assert!((f.reconstruct() - &x).norm() < 1e-12);
    }

    #[test]
    fn zero_matrix() {
        let x = DenseMatrix::zeros(2, 2);
        let f = svd_compact(&x).unwrap();
        assert_eq!(f.s, vec![0.0, 0.0]);
        let eye = DenseMatrix::identity(2, 2);
        assert!((f.u.transpose() * &f.u - &eye).norm() < 1e-12);
        assert!((f.v.transpose() * &f.v - &eye).norm() < 1e-12);
    }

    #[test]
    fn rejects_non_finite() {
        let mut x = DenseMatrix::zeros(2, 2);
        x[(0, 0)] = f64::INFINITY;
        assert!(svd_compact(&x).is_err());
    }

    #[test]
    fn rank_deficient_keeps_orthonormal_factors() {
        let x = dense_from_rows(3, 3, &[1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let f = svd_compact(&x).unwrap();
        assert!((f.s[0] - 2.0).abs() < 1e-12);
        assert!(f.s[1].abs() < 1e-12 && f.s[2].abs() < 1e-12);
        let eye = DenseMatrix::identity(3, 3);
        assert!((f.u.transpose() * &f.u - &eye).norm() < 1e-10);
        assert!((f.v.transpose() * &f.v - &eye).norm() < 1e-10);
        assert!((f.reconstruct() - &x).norm() < 1e-10);
    }

    #[test]
    fn degenerate_spectrum_is_resolved_accurately() {
        // A matrix with a triple singular value must come back with all
        // three values correct to near machine precision.
        let rot = dense_from_rows(2, 2, &[0.8, -0.6, 0.6, 0.8]).unwrap();
        let mut x = DenseMatrix::identity(4, 4) * 2.0;
        x[(3, 3)] = 0.5;
        let mut big_rot = DenseMatrix::identity(4, 4);
        big_rot.view_mut((0, 0), (2, 2)).copy_from(&rot);
        let y = &big_rot * &x;
        let f = svd_compact(&y).unwrap();
        for i in 0..3 {
            assert!((f.s[i] - 2.0).abs() < 1e-13, "s[{i}] = {}", f.s[i]);
        }
        assert!((f.s[3] - 0.5).abs() < 1e-13);
        assert!((f.reconstruct() - &y).norm() < 1e-12);
    }

    #[test]
    fn factors_are_orthonormal_and_sorted() {
        let x = dense_from_rows(
            3,
            4,
            &[
                0.3, -1.2, 0.5, 2.0, 1.1, 0.4, -0.7, 0.2, -0.9, 1.5, 0.6, -0.3,
            ],
        )
        .unwrap();
        let f = svd_compact(&x).unwrap();
        let q = f.rank_q();
        assert_eq!(q, 3);
        let eye = DenseMatrix::identity(q, q);
        assert!((f.u.transpose() * &f.u - &eye).norm() < 1e-10);
        assert!((f.v.transpose() * &f.v - &eye).norm() < 1e-10);
        assert!(f.s.windows(2).all(|w| w[0] >= w[1]));
        let rel = (f.reconstruct() - &x).norm() / x.norm();
        assert!(rel < 1e-10);
    }
}
