use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::matrix::{ensure_same_shape, DenseMatrix};

/// Per-parameter optimizer buffers plus the step counter.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub step: usize,
    pub m1: DenseMatrix,
    pub m2: Option<DenseMatrix>,
    pub m_slow: Option<DenseMatrix>,
}

impl OptimizerState {
    pub fn new(rows: usize, cols: usize, spec: &BaseOptimizerSpec) -> Self {
        let needs_second_moment = matches!(
            spec.kind,
            BaseOptimizerKind::AdamW | BaseOptimizerKind::AdEmaMix
        );
        Self {
            step: 0,
            m1: DenseMatrix::zeros(rows, cols),
            m2: needs_second_moment.then(|| DenseMatrix::zeros(rows, cols)),
            m_slow: matches!(spec.kind, BaseOptimizerKind::AdEmaMix)
                .then(|| DenseMatrix::zeros(rows, cols)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseOptimizerKind {
    SgdM,
    Signum,
    AdamW,
    AdEmaMix,
}

/// Base update rule configuration.
///
/// Momentum conventions differ between the two families: for `SgdM` and
/// `Signum`, `beta1` weights the fresh gradient in the buffer update
/// `M <- (1 - beta1) M + beta1 g` (so `beta1 = 1` means no memory). For
/// `AdamW` and `AdEmaMix`, `beta1`/`beta2`/`beta3` follow the standard
/// published EMA form `m <- beta1 m + (1 - beta1) g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseOptimizerSpec {
    pub kind: BaseOptimizerKind,
    pub beta1: f64,
    #[serde(default)]
    pub beta2: Option<f64>,
    #[serde(default)]
    pub beta3: Option<f64>,
    #[serde(default)]
    pub mix_alpha: Option<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub nesterov: bool,
}

fn default_epsilon() -> f64 {
    1e-8
}

impl BaseOptimizerSpec {
    pub fn sgdm(beta1: f64) -> Self {
        Self {
            kind: BaseOptimizerKind::SgdM,
            beta1,
            beta2: None,
            beta3: None,
            mix_alpha: None,
            epsilon: default_epsilon(),
            nesterov: false,
        }
    }

    pub fn signum(beta1: f64, nesterov: bool) -> Self {
        Self {
            kind: BaseOptimizerKind::Signum,
            nesterov,
            ..Self::sgdm(beta1)
        }
    }

    pub fn adamw() -> Self {
        Self {
            kind: BaseOptimizerKind::AdamW,
            beta1: 0.9,
            beta2: Some(0.999),
            beta3: None,
            mix_alpha: None,
            epsilon: default_epsilon(),
            nesterov: false,
        }
    }

    pub fn ademamix() -> Self {
        Self {
            kind: BaseOptimizerKind::AdEmaMix,
            beta1: 0.9,
            beta2: Some(0.999),
            beta3: Some(0.999),
            mix_alpha: Some(8.0),
            epsilon: default_epsilon(),
            nesterov: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |b: f64| (0.0..1.0).contains(&b);
        match self.kind {
            BaseOptimizerKind::SgdM | BaseOptimizerKind::Signum => {
                if !(self.beta1 > 0.0 && self.beta1 <= 1.0) {
                    return Err(Error::InvalidSpec(
                        "sgdm/signum beta1 must be in (0, 1]".into(),
                    ));
                }
            }
            BaseOptimizerKind::AdamW => {
                if !in_unit(self.beta1) || !self.beta2.map(in_unit).unwrap_or(false) {
                    return Err(Error::InvalidSpec("adamw needs beta1, beta2 in [0, 1)".into()));
                }
            }
            BaseOptimizerKind::AdEmaMix => {
                if !in_unit(self.beta1)
                    || !self.beta2.map(in_unit).unwrap_or(false)
                    || !self.beta3.map(in_unit).unwrap_or(false)
                    || !self.mix_alpha.map(|a| a > 0.0).unwrap_or(false)
                {
                    return Err(Error::InvalidSpec(
                        "ademamix needs beta1, beta2, beta3 in [0, 1) and mix_alpha > 0".into(),
                    ));
                }
            }
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidSpec("epsilon must be positive".into()));
        }
        Ok(())
    }
}

fn sign_zero(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Advances the optimizer state with one gradient and returns the update
/// direction `U_k`.
pub fn base_update(
    spec: &BaseOptimizerSpec,
    state: &mut OptimizerState,
    grad: &DenseMatrix,
) -> Result<DenseMatrix> {
    spec.validate()?;
    ensure_same_shape(&state.m1, grad)?;
    let update = match spec.kind {
        BaseOptimizerKind::SgdM | BaseOptimizerKind::Signum => {
            let b = spec.beta1;
            state.m1 = &state.m1 * (1.0 - b) + grad * b;
            let direction = if spec.nesterov {
                &state.m1 * (1.0 - b) + grad * b
            } else {
                state.m1.clone()
            };
            if spec.kind == BaseOptimizerKind::Signum {
                direction.map(sign_zero)
            } else {
                direction
            }
        }
        BaseOptimizerKind::AdamW => {
            let b1 = spec.beta1;
            let b2 = spec.beta2.expect("validated");
            let t = (state.step + 1) as i32;
            state.m1 = &state.m1 * b1 + grad * (1.0 - b1);
            let m2 = state.m2.as_mut().expect("adamw state");
            *m2 = &*m2 * b2 + grad.component_mul(grad) * (1.0 - b2);
            let m_hat = &state.m1 / (1.0 - b1.powi(t));
            let v_hat = &*m2 / (1.0 - b2.powi(t));
            m_hat.zip_map(&v_hat, |m, v| m / (v.sqrt() + spec.epsilon))
        }
        BaseOptimizerKind::AdEmaMix => {
            let b1 = spec.beta1;
            let b2 = spec.beta2.expect("validated");
            let b3 = spec.beta3.expect("validated");
            let mix = spec.mix_alpha.expect("validated");
            let t = (state.step + 1) as i32;
            state.m1 = &state.m1 * b1 + grad * (1.0 - b1);
            let m_slow = state.m_slow.as_mut().expect("ademamix state");
            *m_slow = &*m_slow * b3 + grad * (1.0 - b3);
            let m_slow = m_slow.clone();
            let m2 = state.m2.as_mut().expect("ademamix state");
            *m2 = &*m2 * b2 + grad.component_mul(grad) * (1.0 - b2);
            let m_hat = &state.m1 / (1.0 - b1.powi(t));
            let v_hat = &*m2 / (1.0 - b2.powi(t));
            let numerator = m_hat + m_slow * mix;
            numerator.zip_map(&v_hat, |m, v| m / (v.sqrt() + spec.epsilon))
        }
    };
    state.step += 1;
    Ok(update)
}
