use nalgebra::SymmetricEigen;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::matrix::DenseMatrix;

/// Orthonormal `d x r` frame drawn from the Stiefel manifold, together with
/// the anisotropy parameter of the sampling law (1 for the uniform law used
/// here: `E[U U^T] = (r/d) I`).
#[derive(Debug, Clone)]
pub struct StiefelSample {
    pub matrix: DenseMatrix,
    pub anisotropy_kappa: f64,
}

/// Draws a uniform Stiefel frame by polar decomposition of a standard
/// Gaussian matrix: `U = A (A^T A)^{-1/2}`.
pub fn sample_stiefel<R: Rng + ?Sized>(d: usize, r: usize, rng: &mut R) -> Result<StiefelSample> {
    if r == 0 || d == 0 || r > d {
        return Err(Error::DimensionMismatch(format!(
            "stiefel frame needs 1 <= r <= d, got d={d}, r={r}"
        )));
    }
    let a = DenseMatrix::from_fn(d, r, |_, _| rng.sample(StandardNormal));
    // The Gram of a Gaussian matrix can be poorly conditioned, so the
    // inverse root is taken through an eigendecomposition rather than the
    // fixed-iteration Newton-Schulz path.
    let gram = a.transpose() * &a;
    let eig = SymmetricEigen::new(gram);
    let mut inv_root = DenseMatrix::zeros(r, r);
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda <= 0.0 {
            return Err(Error::RankDeficient(lambda));
        }
        let col = eig.eigenvectors.column(i);
        inv_root += col * col.transpose() / lambda.sqrt();
    }
    Ok(StiefelSample {
        matrix: a * inv_root,
        anisotropy_kappa: 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn columns_are_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = sample_stiefel(12, 4, &mut rng).unwrap();
        let eye = DenseMatrix::identity(4, 4);
        assert!((s.matrix.transpose() * &s.matrix - eye).norm() < 1e-10);
        assert_eq!(s.anisotropy_kappa, 1.0);
    }

    #[test]
    fn scalar_case_is_a_sign() {
        let mut plus = 0;
        for seed in 0..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = sample_stiefel(1, 1, &mut rng).unwrap();
            let v = s.matrix[(0, 0)];
            assert!((v.abs() - 1.0).abs() < 1e-12);
            if v > 0.0 {
                plus += 1;
            }
        }
        // Both signs occur.
        assert!(plus > 50 && plus < 150);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let mut r1 = ChaCha8Rng::seed_from_u64(42);
        let mut r2 = ChaCha8Rng::seed_from_u64(42);
        let a = sample_stiefel(10, 3, &mut r1).unwrap();
        let b = sample_stiefel(10, 3, &mut r2).unwrap();
        assert_eq!(a.matrix.as_slice(), b.matrix.as_slice());
    }

    #[test]
    fn invalid_dims_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_stiefel(3, 4, &mut rng).is_err());
        assert!(sample_stiefel(3, 0, &mut rng).is_err());
    }
}
