//! Independent numerical oracles for cross-checking the library routines.
//! Nothing here calls into the crate's SVD or Newton-Schulz paths: the
//! Jacobi sweep and the eigendecomposition are self-contained so that the
//! checks stay a genuine second route.

#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use spectra_core::linalg::matrix::DenseMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Random matrix with a prescribed singular spectrum, built from two
/// independent Gaussian-polar orthogonal factors.
pub fn matrix_with_spectrum(
    rows: usize,
    cols: usize,
    spectrum: &[f64],
    rng: &mut impl Rng,
) -> DenseMatrix {
    let q = rows.min(cols);
    assert!(spectrum.len() == q);
    let u = random_orthonormal(rows, q, rng);
    let v = random_orthonormal(cols, q, rng);
    let mut out = DenseMatrix::zeros(rows, cols);
    for (i, &s) in spectrum.iter().enumerate() {
        out += u.column(i) * v.column(i).transpose() * s;
    }
    out
}

/// Orthonormal d x r frame via modified Gram-Schmidt on a Gaussian draw.
pub fn random_orthonormal(d: usize, r: usize, rng: &mut impl Rng) -> DenseMatrix {
    assert!(r <= d);
    let mut a = gaussian(d, r, rng);
    for j in 0..r {
        for i in 0..j {
            let proj = a.column(j).dot(&a.column(i));
            let prev = a.column(i).clone_owned();
            a.column_mut(j).axpy(-proj, &prev, 1.0);
        }
        let norm = a.column(j).norm();
        assert!(norm > 1e-12, "degenerate Gaussian draw");
        a.column_mut(j).scale_mut(1.0 / norm);
    }
    a
}

/// Singular values by one-sided Jacobi rotations: orthogonalizes the
/// columns of (a copy of) the tall orientation of `x` until every pair is
/// numerically orthogonal, then reads off the column norms.
pub fn jacobi_singular_values(x: &DenseMatrix) -> Vec<f64> {
    let mut a = if x.nrows() >= x.ncols() {
        x.clone()
    } else {
        x.transpose()
    };
    let n = a.ncols();
    let tol = 1e-14;
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                let app = a.column(p).dot(&a.column(p));
                let aqq = a.column(q).dot(&a.column(q));
                let apq = a.column(p).dot(&a.column(q));
                off = off.max(apq.abs() / (app * aqq).sqrt().max(1e-300));
                if apq.abs() <= tol * (app * aqq).sqrt() {
                    continue;
                }
                // Jacobi rotation zeroing the (p, q) Gram entry.
                let tau = (aqq - app) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..a.nrows() {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = c * aip - s * aiq;
                    a[(i, q)] = s * aip + c * aiq;
                }
            }
        }
        if off < tol {
            break;
        }
    }
    let mut s: Vec<f64> = (0..n).map(|j| a.column(j).norm()).collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap());
    s
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations; returns
/// (eigenvalues descending, orthonormal eigenvectors as columns).
pub fn jacobi_symmetric_eigen(m: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    let n = m.nrows();
    assert_eq!(n, m.ncols());
    let mut a = m.clone();
    let mut v = DenseMatrix::identity(n, n);
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[(p, q)].abs());
                if a[(p, q)].abs() < 1e-14 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = c * aip - s * aiq;
                    a[(i, q)] = s * aip + c * aiq;
                }
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = c * apj - s * aqj;
                    a[(q, j)] = s * apj + c * aqj;
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = c * vip - s * viq;
                    v[(i, q)] = s * vip + c * viq;
                }
            }
        }
        if off < 1e-14 {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].partial_cmp(&a[(i, i)]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = DenseMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &v.column(src));
    }
    (eigenvalues, vectors)
}

/// Inverse square root of a symmetric positive-definite matrix via the
/// Jacobi eigendecomposition oracle.
pub fn eigen_inverse_sqrt(m: &DenseMatrix) -> DenseMatrix {
    let (vals, vecs) = jacobi_symmetric_eigen(m);
    let n = m.nrows();
    let mut out = DenseMatrix::zeros(n, n);
    for (i, &lambda) in vals.iter().enumerate() {
        assert!(lambda > 0.0, "oracle input must be positive definite");
        out += vecs.column(i) * vecs.column(i).transpose() / lambda.sqrt();
    }
    out
}

/// Largest eigenvalue via the Jacobi eigen oracle.
pub fn eigen_lambda_max(m: &DenseMatrix) -> f64 {
    jacobi_symmetric_eigen(m).0[0]
}
