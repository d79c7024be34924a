use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fw::lmo::{lmo_for, lmo_frobenius, lmo_spectral_ball, FwParams, RegularizerSpec, SpectralBall};
use crate::linalg::clip::{spectral_clip_exact, ClipThreshold};
use crate::linalg::matrix::{ensure_same_shape, spectral_norm, DenseMatrix};

/// Momentum averaging weight as a function of the step index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaSchedule {
    /// `beta_k = 1`: the momentum buffer is just the latest gradient.
    One,
    /// `beta_k = 1 / (k + 1)^{2/3}`.
    KPowTwoThirds,
}

impl BetaSchedule {
    pub fn beta(&self, k: usize) -> f64 {
        match self {
            BetaSchedule::One => 1.0,
            BetaSchedule::KPowTwoThirds => (k as f64 + 1.0).powf(-2.0 / 3.0),
        }
    }
}

/// `M_{k+1} = (1 - beta_k) M_k + beta_k g_{new}`.
pub fn momentum_update(
    m_prev: &DenseMatrix,
    g_new: &DenseMatrix,
    beta_k: f64,
) -> Result<DenseMatrix> {
    if !(beta_k > 0.0 && beta_k <= 1.0) {
        return Err(Error::InvalidSpec("beta_k must be in (0, 1]".into()));
    }
    ensure_same_shape(m_prev, g_new)?;
    Ok(m_prev * (1.0 - beta_k) + g_new * beta_k)
}

/// Trajectory of one composite Frank-Wolfe run. `objective[k]` holds
/// `F(X_k) = f(X_k) + psi(X_k)`, including the starting point.
#[derive(Debug, Clone)]
pub struct CfwTrajectory {
    pub objective: Vec<f64>,
    pub spectral_norms: Vec<f64>,
    pub final_x: DenseMatrix,
}

/// Runs composite Frank-Wolfe with `gamma_k = 2 / (k + 2)` and gradient
/// momentum. `reg = None` means `psi = 0`, for which the LMO jumps every
/// active singular direction to the ball boundary.
///
/// `grad(x, k)` must be deterministic in its arguments; stochasticity is
/// encoded by letting `k` select the mini-batch.
pub fn cfw_run(
    mut grad: impl FnMut(&DenseMatrix, usize) -> Result<DenseMatrix>,
    mut smooth_objective: impl FnMut(&DenseMatrix) -> Result<f64>,
    x0: &DenseMatrix,
    reg: Option<&RegularizerSpec>,
    ball: SpectralBall,
    steps: usize,
    beta_schedule: BetaSchedule,
) -> Result<CfwTrajectory> {
    if spectral_norm(x0) > ball.radius_d2 + 1e-8 {
        return Err(Error::InvalidSpec(
            "starting point lies outside the spectral ball".into(),
        ));
    }
    let psi = |x: &DenseMatrix| -> Result<f64> {
        match reg {
            Some(r) => r.value(x),
            None => Ok(0.0),
        }
    };
    let mut x = x0.clone();
    let mut m = grad(&x, 0)?;
    let mut objective = Vec::with_capacity(steps + 1);
    let mut spectral_norms = Vec::with_capacity(steps + 1);
    objective.push(smooth_objective(&x)? + psi(&x)?);
    spectral_norms.push(spectral_norm(&x));
    for k in 0..steps {
        let v = match reg {
            Some(r) => lmo_for(r, &m, ball)?,
            None => lmo_spectral_ball(&m, ball)?,
        };
        let gamma = FwParams::gamma(k);
        x = &x * (1.0 - gamma) + v * gamma;
        let g_new = grad(&x, k + 1)?;
        m = momentum_update(&m, &g_new, beta_schedule.beta(k))?;
        objective.push(smooth_objective(&x)? + psi(&x)?);
        spectral_norms.push(spectral_norm(&x));
    }
    Ok(CfwTrajectory {
        objective,
        spectral_norms,
        final_x: x,
    })
}

/// Runs the clipped-momentum update rule and the composite Frank-Wolfe
/// rule side by side on the same gradient stream and returns the largest
/// Frobenius gap between the two iterate sequences.
///
/// `c_override` replaces the clipping threshold of the clipped path only,
/// which breaks the parameter translation and serves as a negative
/// control.
pub fn equivalence_check(
    mut grad: impl FnMut(&DenseMatrix, usize) -> Result<DenseMatrix>,
    x0: &DenseMatrix,
    params: &FwParams,
    steps: usize,
    beta_schedule: BetaSchedule,
    c_override: Option<f64>,
) -> Result<f64> {
    let ball = SpectralBall::new(params.radius_d2)?;
    let c = c_override.unwrap_or(params.c_fixed);
    let threshold = ClipThreshold::new(c)?;

    let mut x_clip = x0.clone();
    let mut x_fw = x0.clone();
    let mut m_clip = grad(&x_clip, 0)?;
    let mut m_fw = grad(&x_fw, 0)?;
    let mut max_deviation = 0.0f64;
    for k in 0..steps {
        let gamma = FwParams::gamma(k);
        // Clipped-momentum path with lambda eta_k = gamma_k.
        let eta = gamma / params.lambda;
        let clipped = spectral_clip_exact(&m_clip, threshold)?;
        x_clip = &x_clip * (1.0 - params.lambda * eta) - clipped * (params.alpha * eta);
        // Frank-Wolfe path with the translated Frobenius regularizer.
        let v = lmo_frobenius(&m_fw, params.b, ball)?;
        x_fw = &x_fw * (1.0 - gamma) + v * gamma;

        let beta = beta_schedule.beta(k);
        let g_clip = grad(&x_clip, k + 1)?;
        m_clip = momentum_update(&m_clip, &g_clip, beta)?;
        let g_fw = grad(&x_fw, k + 1)?;
        m_fw = momentum_update(&m_fw, &g_fw, beta)?;

        max_deviation = max_deviation.max((&x_clip - &x_fw).norm());
    }
    Ok(max_deviation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fw::lmo::fw_params_from_problem;
    use crate::linalg::matrix::dense_from_rows;

    #[test]
    fn momentum_beta_one_returns_gradient() {
        let m = dense_from_rows(1, 2, &[5.0, -5.0]).unwrap();
        let g = dense_from_rows(1, 2, &[1.0, 2.0]).unwrap();
        let out = momentum_update(&m, &g, 1.0).unwrap();
        assert_eq!(out.as_slice(), g.as_slice());
    }

    #[test]
    fn momentum_half_mix_from_zero() {
        let m = DenseMatrix::zeros(1, 2);
        let g = dense_from_rows(1, 2, &[1.0, 2.0]).unwrap();
        let out = momentum_update(&m, &g, 0.5).unwrap();
        assert_eq!(out.as_slice(), &[0.5, 1.0]);
    }

    #[test]
    fn momentum_series_approaches_constant_gradient() {
        // Scalar oracle: m_{k+1} = (1 - b_k) m_k + b_k, m_0 = 0.
        let g = dense_from_rows(1, 1, &[1.0]).unwrap();
        let mut m = DenseMatrix::zeros(1, 1);
        let mut oracle = 0.0f64;
        for k in 0..200 {
            let b = BetaSchedule::KPowTwoThirds.beta(k);
            m = momentum_update(&m, &g, b).unwrap();
            oracle = (1.0 - b) * oracle + b;
            assert!((m[(0, 0)] - oracle).abs() < 1e-14);
        }
        assert!((m[(0, 0)] - 1.0).abs() < 0.2);
    }

    #[test]
    fn momentum_rejects_bad_beta() {
        let m = DenseMatrix::zeros(1, 1);
        assert!(momentum_update(&m, &m, 0.0).is_err());
        assert!(momentum_update(&m, &m, 1.5).is_err());
    }

    #[test]
    fn first_step_collapses_to_lmo_point() {
        // gamma_0 = 1, so X_1 = V_1 regardless of X_0.
        let a = dense_from_rows(2, 2, &[0.3, 0.1, -0.2, 0.4]).unwrap();
        let ball = SpectralBall::new(1.0).unwrap();
        let x0 = DenseMatrix::zeros(2, 2);
        let a_run = a.clone();
        let traj = cfw_run(
            |x, _| Ok(x - &a_run),
            |x| Ok(0.5 * (x - &a).norm_squared()),
            &x0,
            None,
            ball,
            1,
            BetaSchedule::One,
        )
        .unwrap();
        let v = lmo_spectral_ball(&(&x0 - &a), ball).unwrap();
        assert!((traj.final_x - v).norm() < 1e-12);
    }

    #[test]
    fn quadratic_converges_inside_ball() {
        let a = dense_from_rows(3, 3, &[0.4, 0.1, 0.0, -0.2, 0.3, 0.1, 0.0, 0.2, -0.3]).unwrap();
        let ball = SpectralBall::new(1.0).unwrap();
        let x0 = DenseMatrix::zeros(3, 3);
        let a_run = a.clone();
        let a_obj = a.clone();
        let traj = cfw_run(
            |x, _| Ok(x - &a_run),
            |x| Ok(0.5 * (x - &a_obj).norm_squared()),
            &x0,
            None,
            ball,
            400,
            BetaSchedule::One,
        )
        .unwrap();
        for &n in &traj.spectral_norms {
            assert!(n <= 1.0 + 1e-8);
        }
        assert!(*traj.objective.last().unwrap() < 1e-3);
    }

    #[test]
    fn deterministic_equivalence_is_tight() {
        let a = dense_from_rows(3, 3, &[0.5, -0.1, 0.2, 0.0, 0.4, 0.1, 0.3, 0.0, -0.2]).unwrap();
        let params =
            fw_params_from_problem(SpectralBall::new(1.0).unwrap(), 0.5, 0.1).unwrap();
        let x0 = DenseMatrix::zeros(3, 3);
        let dev = equivalence_check(
            |x, _| Ok(x - &a),
            &x0,
            &params,
            50,
            BetaSchedule::One,
            None,
        )
        .unwrap();
        assert!(dev <= 1e-10, "deviation {dev}");
    }

    #[test]
    fn mismatched_threshold_breaks_equivalence() {
        let a = dense_from_rows(3, 3, &[0.5, -0.1, 0.2, 0.0, 0.4, 0.1, 0.3, 0.0, -0.2]).unwrap();
        let params =
            fw_params_from_problem(SpectralBall::new(1.0).unwrap(), 0.5, 0.1).unwrap();
        let x0 = DenseMatrix::zeros(3, 3);
        let dev = equivalence_check(
            |x, _| Ok(x - &a),
            &x0,
            &params,
            50,
            BetaSchedule::One,
            Some(params.c_fixed * 0.2),
        )
        .unwrap();
        assert!(dev > 1e-3, "deviation {dev}");
    }

    #[test]
    fn run_rejects_infeasible_start() {
        let ball = SpectralBall::new(0.5).unwrap();
        let x0 = dense_from_rows(1, 1, &[2.0]).unwrap();
        let res = cfw_run(
            |_, _| Ok(DenseMatrix::zeros(1, 1)),
            |_| Ok(0.0),
            &x0,
            None,
            ball,
            1,
            BetaSchedule::One,
        );
        assert!(res.is_err());
    }
}
