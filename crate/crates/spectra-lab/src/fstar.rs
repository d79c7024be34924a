use anyhow::{anyhow, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use spectra_core::fw::{cfw_run, lmo_for, lmo_spectral_ball, BetaSchedule, RegularizerSpec, SpectralBall};
use spectra_core::linalg::clip::{spectral_clip_exact, ClipThreshold};
use spectra_core::linalg::matrix::{fro_dot, DenseMatrix};
use spectra_core::synth::{grad, loss, smoothness_bounds, LogisticProblem};

/// Reference optimal value with an honest suboptimality bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FStarCertificate {
    pub value: f64,
    pub method: String,
    /// Frank-Wolfe gap at the certified point; upper-bounds `F(x) - F*`.
    pub gap_bound: f64,
}

fn psi(reg: Option<&RegularizerSpec>, x: &DenseMatrix) -> Result<f64> {
    match reg {
        Some(r) => Ok(r.value(x)?),
        None => Ok(0.0),
    }
}

fn composite_value(
    problem: &LogisticProblem,
    reg: Option<&RegularizerSpec>,
    x: &DenseMatrix,
) -> Result<f64> {
    Ok(loss(problem, x, None)? + psi(reg, x)?)
}

/// Frank-Wolfe gap `<grad, x - v> + psi(x) - psi(v)` with `v` the LMO
/// point; a certificate for the suboptimality of `x` on a convex problem.
fn fw_gap(
    problem: &LogisticProblem,
    reg: Option<&RegularizerSpec>,
    ball: SpectralBall,
    x: &DenseMatrix,
) -> Result<f64> {
    let g = grad(problem, x, None)?;
    let v = match reg {
        Some(r) => lmo_for(r, &g, ball)?,
        None => lmo_spectral_ball(&g, ball)?,
    };
    Ok(fro_dot(&g, &(x - &v)) + psi(reg, x)? - psi(reg, &v)?)
}

const GAP_TARGET: f64 = 1e-10;

/// Computes the reference optimum of the composite problem over the
/// spectral ball: a short Frank-Wolfe warm start followed by projected
/// gradient descent until the Frank-Wolfe gap certifies the value (or the
/// step budget runs out).
pub fn compute_f_star(
    problem: &LogisticProblem,
    reg: Option<&RegularizerSpec>,
    ball: SpectralBall,
    budget: usize,
) -> Result<FStarCertificate> {
    if budget == 0 {
        return Err(anyhow!("reference-optimum budget must be positive"));
    }
    let (d, _) = problem.dim();
    let x0 = DenseMatrix::zeros(d, d);
    let warm_steps = budget.min(500);
    let traj = cfw_run(
        |x, _| Ok(grad(problem, x, None)?),
        |x| Ok(loss(problem, x, None)?),
        &x0,
        reg,
        ball,
        warm_steps,
        BetaSchedule::One,
    )?;
    let mut x = traj.final_x;

    let bounds = smoothness_bounds(problem)?;
    let b = reg.map(|r| r.b).unwrap_or(0.0);
    let step = 1.0 / (bounds.lf_bound + b).max(1e-12);
    let threshold = ClipThreshold::new(ball.radius_d2)
        .map_err(|e| anyhow!("bad ball radius: {e}"))?;

    let mut best_value = composite_value(problem, reg, &x)?;
    let mut best_gap = fw_gap(problem, reg, ball, &x)?;
    let remaining = budget.saturating_sub(warm_steps);
    for iter in 0..remaining {
        let mut g = grad(problem, &x, None)?;
        if b > 0.0 {
            g += &x * b;
        }
        x = spectral_clip_exact(&(&x - g * step), threshold)?;
        // The gap needs an extra gradient + LMO; sample it sparsely.
        if iter % 50 == 49 || iter + 1 == remaining {
            let value = composite_value(problem, reg, &x)?;
            let gap = fw_gap(problem, reg, ball, &x)?;
            if value < best_value {
                best_value = value;
            }
            if gap < best_gap {
                best_gap = gap;
            }
            if best_gap <= GAP_TARGET {
                break;
            }
        }
    }
    Ok(FStarCertificate {
        value: best_value,
        method: format!(
            "frank-wolfe warm start ({warm_steps} steps) + projected gradient polish, budget {budget}"
        ),
        gap_bound: best_gap.max(0.0),
    })
}

/// Sampled curvature estimate: maximizes the Bregman-gap quotient
/// `2/gamma^2 [f(x + gamma(s - x)) - f(x) - gamma <grad f(x), s - x>]`
/// over random feasible pairs and step sizes.
pub fn estimate_curvature(
    problem: &LogisticProblem,
    ball: SpectralBall,
    samples: usize,
    rng: &mut impl Rng,
) -> Result<f64> {
    let (d, _) = problem.dim();
    let threshold = ClipThreshold::new(ball.radius_d2)
        .map_err(|e| anyhow!("bad ball radius: {e}"))?;
    let random_feasible = |rng: &mut dyn rand::RngCore| -> Result<DenseMatrix> {
        let raw = DenseMatrix::from_fn(d, d, |_, _| {
            rng.sample::<f64, _>(rand_distr::StandardNormal) * ball.radius_d2
        });
        Ok(spectral_clip_exact(&raw, threshold)?)
    };
    let mut c_f = 0.0f64;
    for _ in 0..samples {
        let x = random_feasible(rng)?;
        let s = random_feasible(rng)?;
        let gamma: f64 = rng.gen_range(0.05..=1.0);
        let fx = loss(problem, &x, None)?;
        let g = grad(problem, &x, None)?;
        let dir = &s - &x;
        let y = &x + &dir * gamma;
        let fy = loss(problem, &y, None)?;
        let bregman = fy - fx - gamma * fro_dot(&g, &dir);
        c_f = c_f.max(2.0 / (gamma * gamma) * bregman);
    }
    Ok(c_f)
}
