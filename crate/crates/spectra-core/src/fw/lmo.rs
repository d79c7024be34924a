use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::clip::{spectral_clip_exact, ClipThreshold};
use crate::linalg::matrix::{entrywise_l1_norm, fro_dot, linf_norm, DenseMatrix};
use crate::linalg::svd::svd_compact;

/// Spectral-norm ball `{X : ||X||_2 <= D_2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralBall {
    pub radius_d2: f64,
}

impl SpectralBall {
    pub fn new(radius_d2: f64) -> Result<Self> {
        if !(radius_d2 > 0.0) {
            return Err(Error::InvalidSpec("ball radius must be positive".into()));
        }
        Ok(Self { radius_d2 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularizerKind {
    FrobeniusSq,
    Nuclear,
    SchattenP,
    MatrixEntropy,
    LinfSq,
}

/// Convex regularizer `psi` of the composite objective, parameterized by
/// the strength `b` (and the exponent `p` for the Schatten norm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularizerSpec {
    pub kind: RegularizerKind,
    pub b: f64,
    #[serde(default)]
    pub p: Option<f64>,
}

impl RegularizerSpec {
    pub fn frobenius_sq(b: f64) -> Self {
        Self {
            kind: RegularizerKind::FrobeniusSq,
            b,
            p: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b > 0.0) {
            return Err(Error::InvalidSpec("regularizer strength b must be > 0".into()));
        }
        if self.kind == RegularizerKind::SchattenP && !self.p.map(|p| p > 1.0).unwrap_or(false) {
            return Err(Error::InvalidSpec("schatten regularizer needs p > 1".into()));
        }
        Ok(())
    }

    /// Evaluates `psi(x)`.
    pub fn value(&self, x: &DenseMatrix) -> Result<f64> {
        if self.kind == RegularizerKind::LinfSq {
            let v = linf_norm(x);
            return Ok(0.5 * self.b * v * v);
        }
        let spectrum = svd_compact(x)?.s;
        Ok(self.value_from_spectrum(&spectrum))
    }

    /// Evaluates `psi` directly from a known spectrum (LinfSq excluded:
    /// it is not a function of the singular values alone).
    pub fn value_from_spectrum(&self, s: &[f64]) -> f64 {
        match self.kind {
            RegularizerKind::FrobeniusSq => 0.5 * self.b * s.iter().map(|v| v * v).sum::<f64>(),
            RegularizerKind::Nuclear => self.b * s.iter().sum::<f64>(),
            RegularizerKind::SchattenP => {
                let p = self.p.expect("validated");
                self.b / p * s.iter().map(|v| v.powf(p)).sum::<f64>()
            }
            RegularizerKind::MatrixEntropy => {
                self.b
                    * s.iter()
                        .map(|&v| if v > 0.0 { v * v.ln() - v } else { 0.0 })
                        .sum::<f64>()
            }
            RegularizerKind::LinfSq => panic!("LinfSq is not spectral"),
        }
    }
}

/// Parameters of the clipped update rule translated from the constrained
/// composite problem: `c = b D_2`, `alpha = lambda / b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FwParams {
    pub c_fixed: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub b: f64,
    pub radius_d2: f64,
}

impl FwParams {
    /// Step size `gamma_k = lambda * eta_k = 2 / (k + 2)`.
    pub fn gamma(k: usize) -> f64 {
        2.0 / (k as f64 + 2.0)
    }
}

pub fn fw_params_from_problem(ball: SpectralBall, b: f64, lambda: f64) -> Result<FwParams> {
    if !(b > 0.0 && lambda > 0.0) {
        return Err(Error::InvalidSpec("b and lambda must be positive".into()));
    }
    Ok(FwParams {
        c_fixed: b * ball.radius_d2,
        alpha: lambda / b,
        lambda,
        b,
        radius_d2: ball.radius_d2,
    })
}

/// Applies a per-singular-value rule to the spectrum of `g` and assembles
/// `-U_G diag(s*) V_G^T`.
fn spectral_lmo(g: &DenseMatrix, rule: impl Fn(f64) -> f64) -> Result<DenseMatrix> {
    let f = svd_compact(g)?;
    let spectrum: Vec<f64> = f.s.iter().map(|&s| -rule(s)).collect();
    Ok(f.reconstruct_with(&spectrum))
}

/// LMO of `<m, X> + (b/2) ||X||_F^2` over the spectral ball:
/// `clipSp_{D_2}(-m / b)`.
pub fn lmo_frobenius(m: &DenseMatrix, b: f64, ball: SpectralBall) -> Result<DenseMatrix> {
    if !(b > 0.0) {
        return Err(Error::InvalidSpec("b must be positive".into()));
    }
    spectral_clip_exact(&(-m / b), ClipThreshold::new(ball.radius_d2)?)
}

/// Nuclear-norm LMO: singular values at most `b` are soft-thresholded to
/// zero, larger ones jump to the ball radius.
pub fn lmo_nuclear(g: &DenseMatrix, b: f64, ball: SpectralBall) -> Result<DenseMatrix> {
    if !(b > 0.0) {
        return Err(Error::InvalidSpec("b must be positive".into()));
    }
    spectral_lmo(g, |s| if s <= b { 0.0 } else { ball.radius_d2 })
}

/// Schatten p-norm LMO: `s* = min((s / b)^{1 / (p - 1)}, D_2)`.
pub fn lmo_schatten_p(g: &DenseMatrix, b: f64, p: f64, ball: SpectralBall) -> Result<DenseMatrix> {
    if !(b > 0.0 && p > 1.0) {
        return Err(Error::InvalidSpec("schatten LMO needs b > 0 and p > 1".into()));
    }
    spectral_lmo(g, |s| (s / b).powf(1.0 / (p - 1.0)).min(ball.radius_d2))
}

/// Matrix-entropy LMO: `s* = min(exp(s / b), D_2)`, with the exponent
/// capped so the intermediate never overflows.
pub fn lmo_entropy(g: &DenseMatrix, b: f64, ball: SpectralBall) -> Result<DenseMatrix> {
    if !(b > 0.0) {
        return Err(Error::InvalidSpec("b must be positive".into()));
    }
    let cap = (2.0 * ball.radius_d2).ln();
    spectral_lmo(g, |s| (s / b).min(cap).exp().min(ball.radius_d2))
}

/// Projected approximation of the l-infinity-squared LMO:
/// `-(||G||_1 / b) clipSp_{b D_2 / ||G||_1}(sign(G))`. The returned flag
/// certifies exactness: it is true when the unconstrained solution already
/// lies in the ball, in which case no projection happened.
pub fn lmo_linf_approx(
    g: &DenseMatrix,
    b: f64,
    ball: SpectralBall,
) -> Result<(DenseMatrix, bool)> {
    if !(b > 0.0) {
        return Err(Error::InvalidSpec("b must be positive".into()));
    }
    let l1 = entrywise_l1_norm(g);
    if l1 == 0.0 {
        return Err(Error::ZeroGradient);
    }
    let sign = g.map(|v| {
        if v > 0.0 {
            1.0
        } else if v < 0.0 {
            -1.0
        } else {
            0.0
        }
    });
    let threshold = b * ball.radius_d2 / l1;
    let sign_spectral_norm = crate::linalg::matrix::spectral_norm(&sign);
    let clipped = spectral_clip_exact(&sign, ClipThreshold::new(threshold)?)?;
    Ok((clipped * (-l1 / b), sign_spectral_norm <= threshold))
}

/// LMO of a purely linear objective over the spectral ball (`psi = 0`):
/// every active singular direction jumps to the radius.
pub fn lmo_spectral_ball(g: &DenseMatrix, ball: SpectralBall) -> Result<DenseMatrix> {
    let tol = 1e-14 * crate::linalg::matrix::frobenius_norm(g).max(1.0);
    spectral_lmo(g, |s| if s > tol { ball.radius_d2 } else { 0.0 })
}

/// Dispatches to the LMO matching the regularizer kind.
pub fn lmo_for(reg: &RegularizerSpec, m: &DenseMatrix, ball: SpectralBall) -> Result<DenseMatrix> {
    reg.validate()?;
    match reg.kind {
        RegularizerKind::FrobeniusSq => lmo_frobenius(m, reg.b, ball),
        RegularizerKind::Nuclear => lmo_nuclear(m, reg.b, ball),
        RegularizerKind::SchattenP => lmo_schatten_p(m, reg.b, reg.p.expect("validated"), ball),
        RegularizerKind::MatrixEntropy => lmo_entropy(m, reg.b, ball),
        RegularizerKind::LinfSq => lmo_linf_approx(m, reg.b, ball).map(|(x, _)| x),
    }
}

/// Composite subproblem objective `<g, X> + psi(X)`, the quantity each LMO
/// minimizes over the ball.
pub fn lmo_objective(reg: &RegularizerSpec, g: &DenseMatrix, x: &DenseMatrix) -> Result<f64> {
    Ok(fro_dot(g, x) + reg.value(x)?)
}
