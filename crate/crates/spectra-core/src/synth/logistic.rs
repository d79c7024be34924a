use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::matrix::{ensure_same_shape, fro_dot, frobenius_norm, spectral_norm, DenseMatrix};

/// Matrix logistic-regression instance: `f(X) = mean log(1 + exp(-y_i <A_i, X>))`.
#[derive(Debug, Clone)]
pub struct LogisticProblem {
    pub features: Vec<DenseMatrix>,
    pub labels: Vec<f64>,
    pub test_features: Vec<DenseMatrix>,
    pub test_labels: Vec<f64>,
    /// Planted ground-truth matrix used to generate the labels.
    pub ground_truth: DenseMatrix,
}

impl LogisticProblem {
    pub fn validate(&self) -> Result<()> {
        if self.features.is_empty() || self.features.len() != self.labels.len() {
            return Err(Error::InvalidSpec(
                "training features and labels must be non-empty and match".into(),
            ));
        }
        if self.test_features.len() != self.test_labels.len() {
            return Err(Error::InvalidSpec("test features and labels must match".into()));
        }
        if !self
            .labels
            .iter()
            .chain(self.test_labels.iter())
            .all(|&y| y == 1.0 || y == -1.0)
        {
            return Err(Error::InvalidSpec("labels must be +1 or -1".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> (usize, usize) {
        (self.features[0].nrows(), self.features[0].ncols())
    }
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn labeled_samples(
    n: usize,
    d: usize,
    truth: &DenseMatrix,
    sigma_noise: f64,
    rng: &mut impl Rng,
) -> (Vec<DenseMatrix>, Vec<f64>) {
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let a = gaussian_matrix(d, d, rng);
        let noise: f64 = rng.sample(StandardNormal);
        let margin = fro_dot(&a, truth) + sigma_noise * noise;
        labels.push(if margin >= 0.0 { 1.0 } else { -1.0 });
        features.push(a);
    }
    (features, labels)
}

/// Generates the weight-regularization instance: Gaussian ground truth and
/// features, labels `y_i = sign(<A_i, X~> + xi_i)` with label noise of
/// standard deviation `sigma_noise`.
pub fn gen_weight_reg_dataset(
    d: usize,
    n_train: usize,
    n_test: usize,
    sigma_noise: f64,
    rng: &mut impl Rng,
) -> Result<LogisticProblem> {
    if d == 0 || n_train == 0 {
        return Err(Error::InvalidSpec("d and n_train must be >= 1".into()));
    }
    if sigma_noise < 0.0 {
        return Err(Error::InvalidSpec("sigma_noise must be >= 0".into()));
    }
    let ground_truth = gaussian_matrix(d, d, rng);
    let (features, labels) = labeled_samples(n_train, d, &ground_truth, sigma_noise, rng);
    let (test_features, test_labels) = labeled_samples(n_test, d, &ground_truth, sigma_noise, rng);
    let problem = LogisticProblem {
        features,
        labels,
        test_features,
        test_labels,
        ground_truth,
    };
    problem.validate()?;
    Ok(problem)
}

/// `log(1 + exp(z))` without overflow for any finite `z`.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn logistic_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn check_batch(batch: Option<&[usize]>, n: usize) -> Result<()> {
    if let Some(idx) = batch {
        if idx.is_empty() {
            return Err(Error::InvalidSpec("batch must be non-empty".into()));
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= n) {
            return Err(Error::InvalidSpec(format!(
                "batch index {bad} out of range for {n} samples"
            )));
        }
    }
    Ok(())
}

fn mean_over<T: Clone>(
    features: &[DenseMatrix],
    labels: &[f64],
    batch: Option<&[usize]>,
    init: T,
    mut acc: impl FnMut(&mut T, &DenseMatrix, f64),
    finish: impl FnOnce(T, f64) -> T,
) -> T {
    let mut state = init;
    let count = match batch {
        Some(idx) => {
            for &i in idx {
                acc(&mut state, &features[i], labels[i]);
            }
            idx.len()
        }
        None => {
            for (a, &y) in features.iter().zip(labels) {
                acc(&mut state, a, y);
            }
            features.len()
        }
    };
    finish(state, count as f64)
}

/// Mean logistic loss over the batch (full training set if `batch` is `None`).
pub fn loss(problem: &LogisticProblem, x: &DenseMatrix, batch: Option<&[usize]>) -> Result<f64> {
    ensure_same_shape(&problem.features[0], x)?;
    check_batch(batch, problem.features.len())?;
    Ok(mean_over(
        &problem.features,
        &problem.labels,
        batch,
        0.0f64,
        |sum, a, y| *sum += softplus(-y * fro_dot(a, x)),
        |sum, n| sum / n,
    ))
}

/// Mean logistic loss over the held-out test set.
pub fn test_loss(problem: &LogisticProblem, x: &DenseMatrix) -> Result<f64> {
    ensure_same_shape(&problem.features[0], x)?;
    Ok(mean_over(
        &problem.test_features,
        &problem.test_labels,
        None,
        0.0f64,
        |sum, a, y| *sum += softplus(-y * fro_dot(a, x)),
        |sum, n| sum / n,
    ))
}

/// Mean gradient `(1/n) sum -y_i sigmoid(-y_i <A_i, X>) A_i` over the batch.
pub fn grad(
    problem: &LogisticProblem,
    x: &DenseMatrix,
    batch: Option<&[usize]>,
) -> Result<DenseMatrix> {
    ensure_same_shape(&problem.features[0], x)?;
    check_batch(batch, problem.features.len())?;
    let (rows, cols) = problem.dim();
    Ok(mean_over(
        &problem.features,
        &problem.labels,
        batch,
        DenseMatrix::zeros(rows, cols),
        |sum, a, y| {
            let coef = -y * logistic_sigmoid(-y * fro_dot(a, x));
            *sum += a * coef;
        },
        |sum, n| sum / n,
    ))
}

/// Upper bounds on gradient norms and the Frobenius smoothness constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessBounds {
    /// Spectral-norm gradient bound `M <= (1/n) sum ||A_i||_2`.
    pub m_bound: f64,
    /// Frobenius gradient bound `B <= (1/n) sum ||A_i||_F`.
    pub b_bound: f64,
    /// `L_F <= (1/(4n)) sigma_max(A~)^2` for the row-stacked vectorization.
    pub lf_bound: f64,
}

/// Computes the smoothness bounds. `sigma_max(A~)^2` equals the largest
/// eigenvalue of the n x n Gram matrix of pairwise Frobenius inner
/// products, which avoids forming the n x d^2 vectorization.
pub fn smoothness_bounds(problem: &LogisticProblem) -> Result<SmoothnessBounds> {
    problem.validate()?;
    let n = problem.features.len();
    let mut m_bound = 0.0;
    let mut b_bound = 0.0;
    for a in &problem.features {
        m_bound += spectral_norm(a);
        b_bound += frobenius_norm(a);
    }
    m_bound /= n as f64;
    b_bound /= n as f64;

    let mut gram = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = fro_dot(&problem.features[i], &problem.features[j]);
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    let sigma_max_sq = nalgebra::SymmetricEigen::new(gram)
        .eigenvalues
        .iter()
        .fold(0.0f64, |m, &v| m.max(v));
    Ok(SmoothnessBounds {
        m_bound,
        b_bound,
        lf_bound: sigma_max_sq / (4.0 * n as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::dense_from_rows;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny_problem() -> LogisticProblem {
        let a1 = dense_from_rows(2, 2, &[1.0, 0.0, 0.0, 1.0]).unwrap();
        let a2 = dense_from_rows(2, 2, &[0.0, 1.0, -1.0, 0.0]).unwrap();
        LogisticProblem {
            features: vec![a1, a2],
            labels: vec![1.0, -1.0],
            test_features: vec![],
            test_labels: vec![],
            ground_truth: DenseMatrix::zeros(2, 2),
        }
    }

    #[test]
    fn zero_point_gives_ln_two() {
        let p = tiny_problem();
        let x = DenseMatrix::zeros(2, 2);
        let l = loss(&p, &x, None).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn huge_positive_margin_vanishes() {
        let a = dense_from_rows(1, 1, &[1.0]).unwrap();
        let p = LogisticProblem {
            features: vec![a],
            labels: vec![1.0],
            test_features: vec![],
            test_labels: vec![],
            ground_truth: DenseMatrix::zeros(1, 1),
        };
        let x = dense_from_rows(1, 1, &[1e3]).unwrap();
        let l = loss(&p, &x, None).unwrap();
        assert!(l >= 0.0 && l < 1e-300);
        let x_neg = dense_from_rows(1, 1, &[-1e3]).unwrap();
        let l_neg = loss(&p, &x_neg, None).unwrap();
        assert!((l_neg - 1e3).abs() < 1e-9);
    }

    #[test]
    fn loss_matches_naive_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = gen_weight_reg_dataset(3, 5, 0, 1.0, &mut rng).unwrap();
        let x = gaussian_matrix(3, 3, &mut rng) * 0.3;
        let naive: f64 = p
            .features
            .iter()
            .zip(&p.labels)
            .map(|(a, &y)| (1.0 + (-y * fro_dot(a, &x)).exp()).ln())
            .sum::<f64>()
            / 5.0;
        assert!((loss(&p, &x, None).unwrap() - naive).abs() < 1e-12);
    }

    #[test]
    fn gradient_at_zero_single_sample() {
        let a = dense_from_rows(2, 2, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let p = LogisticProblem {
            features: vec![a.clone()],
            labels: vec![-1.0],
            test_features: vec![],
            test_labels: vec![],
            ground_truth: DenseMatrix::zeros(2, 2),
        };
        let g = grad(&p, &DenseMatrix::zeros(2, 2), None).unwrap();
        assert!((g - a * 0.5).norm() < 1e-15);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = gen_weight_reg_dataset(3, 8, 0, 2.0, &mut rng).unwrap();
        let x = gaussian_matrix(3, 3, &mut rng) * 0.2;
        let g = grad(&p, &x, None).unwrap();
        let h = 1e-6;
        for i in 0..3 {
            for j in 0..3 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[(i, j)] += h;
                xm[(i, j)] -= h;
                let fd =
                    (loss(&p, &xp, None).unwrap() - loss(&p, &xm, None).unwrap()) / (2.0 * h);
                assert!(
                    (fd - g[(i, j)]).abs() <= 1e-5 * (1.0 + g[(i, j)].abs()),
                    "entry ({i},{j}): fd {fd} vs {}",
                    g[(i, j)]
                );
            }
        }
    }

    #[test]
    fn full_batch_equals_mean_of_per_sample_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = gen_weight_reg_dataset(2, 4, 0, 1.0, &mut rng).unwrap();
        let x = gaussian_matrix(2, 2, &mut rng);
        let full = grad(&p, &x, None).unwrap();
        let mut mean = DenseMatrix::zeros(2, 2);
        for i in 0..4 {
            mean += grad(&p, &x, Some(&[i])).unwrap();
        }
        assert!((full - mean / 4.0).norm() < 1e-14);
    }

    #[test]
    fn dataset_is_seed_deterministic() {
        let p1 = gen_weight_reg_dataset(4, 6, 3, 5.0, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        let p2 = gen_weight_reg_dataset(4, 6, 3, 5.0, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        assert_eq!(p1.labels, p2.labels);
        assert_eq!(p1.features[0], p2.features[0]);
        assert_eq!(p1.test_features.len(), 3);
    }

    #[test]
    fn noiseless_labels_are_separable_by_truth() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = gen_weight_reg_dataset(5, 30, 0, 0.0, &mut rng).unwrap();
        for (a, &y) in p.features.iter().zip(&p.labels) {
            assert!(y * fro_dot(a, &p.ground_truth) >= 0.0);
        }
    }

    #[test]
    fn smoothness_bounds_identity_feature() {
        let a = DenseMatrix::identity(2, 2);
        let p = LogisticProblem {
            features: vec![a],
            labels: vec![1.0],
            test_features: vec![],
            test_labels: vec![],
            ground_truth: DenseMatrix::zeros(2, 2),
        };
        let b = smoothness_bounds(&p).unwrap();
        assert!((b.m_bound - 1.0).abs() < 1e-12);
        assert!((b.b_bound - 2.0f64.sqrt()).abs() < 1e-12);
        assert!((b.lf_bound - 0.5).abs() < 1e-12);
    }

    #[test]
    fn smoothness_bounds_are_homogeneous() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = gen_weight_reg_dataset(3, 4, 0, 1.0, &mut rng).unwrap();
        let scaled = LogisticProblem {
            features: p.features.iter().map(|a| a * 3.0).collect(),
            ..p.clone()
        };
        let b1 = smoothness_bounds(&p).unwrap();
        let b2 = smoothness_bounds(&scaled).unwrap();
        assert!((b2.m_bound - 3.0 * b1.m_bound).abs() < 1e-9);
        assert!((b2.lf_bound - 9.0 * b1.lf_bound).abs() < 1e-7 * b1.lf_bound.max(1.0));
    }
}
