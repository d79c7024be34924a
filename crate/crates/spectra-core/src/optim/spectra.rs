use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::clip::ClipThreshold;
use crate::linalg::matrix::{ensure_same_shape, DenseMatrix};
use crate::linalg::newton_schulz::soft_spectral_clip;
use crate::linalg::svd::svd_compact;
use crate::optim::base::{base_update, BaseOptimizerSpec, OptimizerState};
use crate::optim::schedule::{clip_at, lr_at, ClipScheduleSpec, ScheduleSpec};

/// Shape-aware scaling rule `alpha = max(sqrt(m / n), 1)`, aligning the
/// spectral constraint with the RMS-to-RMS norm across layer shapes.
pub fn alpha_for_shape(m: usize, n: usize) -> f64 {
    (m as f64 / n as f64).sqrt().max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaRule {
    Fixed(f64),
    ShapeScaled,
}

impl AlphaRule {
    pub fn alpha(&self, rows: usize, cols: usize) -> f64 {
        match self {
            AlphaRule::Fixed(a) => *a,
            AlphaRule::ShapeScaled => alpha_for_shape(rows, cols),
        }
    }
}

/// Full configuration of the spectrally-clipped wrapper update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectraConfig {
    pub post_clip_c: f64,
    #[serde(default)]
    pub pre_clip_enabled: bool,
    #[serde(default = "default_pre_clip_c")]
    pub pre_clip_c: f64,
    pub weight_decay_lambda: f64,
    pub alpha_rule: AlphaRule,
    pub ns_iters: usize,
    pub lr_schedule: ScheduleSpec,
    pub clip_schedule: ClipScheduleSpec,
}

fn default_pre_clip_c() -> f64 {
    10.0
}

impl SpectraConfig {
    /// Recommended defaults: `lambda = 0.1`, `c = 10`, `N_s = 10`.
    pub fn recommended(lr_schedule: ScheduleSpec, clip_schedule: ClipScheduleSpec) -> Self {
        Self {
            post_clip_c: 10.0,
            pre_clip_enabled: false,
            pre_clip_c: 10.0,
            weight_decay_lambda: 0.1,
            alpha_rule: AlphaRule::ShapeScaled,
            ns_iters: 10,
            lr_schedule,
            clip_schedule,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.post_clip_c > 0.0) {
            return Err(Error::InvalidSpec("post_clip_c must be positive".into()));
        }
        if self.pre_clip_enabled && !(self.pre_clip_c > 0.0) {
            return Err(Error::InvalidSpec("pre_clip_c must be positive".into()));
        }
        if self.weight_decay_lambda < 0.0 {
            return Err(Error::InvalidSpec(
                "weight_decay_lambda must be >= 0".into(),
            ));
        }
        if self.ns_iters == 0 {
            return Err(Error::InvalidSpec("ns_iters must be >= 1".into()));
        }
        self.lr_schedule.validate()?;
        self.clip_schedule.validate()
    }
}

/// Learning rate and clipping threshold resolved for one step.
#[derive(Debug, Clone, Copy)]
pub struct StepScales {
    pub eta_k: f64,
    pub c_k: f64,
    pub alpha: f64,
}

pub fn step_scales(cfg: &SpectraConfig, k: usize, rows: usize, cols: usize) -> Result<StepScales> {
    let eta_k = lr_at(&cfg.lr_schedule, k)?;
    let c_k = clip_at(
        &cfg.clip_schedule,
        k,
        eta_k,
        cfg.lr_schedule.base_lr,
        cfg.lr_schedule.warmup_steps,
        cfg.lr_schedule.end_stable(),
        cfg.lr_schedule.total_steps,
    )?;
    Ok(StepScales {
        eta_k,
        c_k,
        alpha: cfg.alpha_rule.alpha(rows, cols),
    })
}

/// One wrapper step: optional pre-clip of the gradient, base optimizer
/// update, soft spectral clip of the update, then decoupled weight decay:
/// `X_{k+1} = (1 - lambda eta_k) X_k - alpha eta_k SSC_{c_k}(U_k)`.
pub fn spectra_step(
    param: &DenseMatrix,
    grad: &DenseMatrix,
    state: &mut OptimizerState,
    base: &BaseOptimizerSpec,
    cfg: &SpectraConfig,
    k: usize,
) -> Result<DenseMatrix> {
    cfg.validate()?;
    ensure_same_shape(param, grad)?;
    if k != state.step {
        return Err(Error::InvalidSpec(format!(
            "step index {k} does not match optimizer state step {}",
            state.step
        )));
    }
    let scales = step_scales(cfg, k, param.nrows(), param.ncols())?;

    let effective_grad = if cfg.pre_clip_enabled {
        soft_spectral_clip(grad, ClipThreshold::new(cfg.pre_clip_c)?, cfg.ns_iters)?
    } else {
        grad.clone()
    };
    let update = base_update(base, state, &effective_grad)?;
    let clipped = soft_spectral_clip(&update, ClipThreshold::new(scales.c_k)?, cfg.ns_iters)?;
    Ok(param * (1.0 - cfg.weight_decay_lambda * scales.eta_k)
        - clipped * (scales.alpha * scales.eta_k))
}

/// Per-update spectral statistics recorded by the norm audit.
#[derive(Debug, Clone, Copy)]
pub struct UpdateNormRecord {
    pub max_singular: f64,
    pub min_singular: f64,
    pub condition: f64,
}

#[derive(Debug, Clone)]
pub struct UpdateNormReport {
    pub records: Vec<UpdateNormRecord>,
    pub ceiling_violations: usize,
}

const CEILING_TOL: f64 = 1e-6;

/// Audits a history of (already clipped) updates against the
/// `alpha * c_k` spectral-norm ceiling.
pub fn update_norm_ceiling_audit(
    updates: &[DenseMatrix],
    alpha: f64,
    c_series: &[f64],
) -> Result<UpdateNormReport> {
    if updates.is_empty() || updates.len() != c_series.len() {
        return Err(Error::InvalidSpec(format!(
            "audit needs a non-empty history with one threshold per update ({} vs {})",
            updates.len(),
            c_series.len()
        )));
    }
    let mut records = Vec::with_capacity(updates.len());
    let mut ceiling_violations = 0;
    for (u, &c_k) in updates.iter().zip(c_series) {
        let f = svd_compact(u)?;
        let max_singular = f.s[0];
        let min_singular = *f.s.last().unwrap();
        records.push(UpdateNormRecord {
            max_singular,
            min_singular,
            condition: if min_singular > 0.0 {
                max_singular / min_singular
            } else {
                f64::INFINITY
            },
        });
        if alpha * max_singular > alpha * c_k + CEILING_TOL {
            ceiling_violations += 1;
        }
    }
    Ok(UpdateNormReport {
        records,
        ceiling_violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::{dense_from_rows, spectral_norm};
    use crate::optim::schedule::{ClipScheduleKind, ScheduleKind};

    fn constant_schedule(lr: f64, total: usize) -> ScheduleSpec {
        ScheduleSpec {
            kind: ScheduleKind::Constant,
            base_lr: lr,
            warmup_steps: 0,
            total_steps: total,
            final_lr_fraction: 0.0,
            stable_fraction: 0.8,
        }
    }

    fn constant_clip(c: f64) -> ClipScheduleSpec {
        ClipScheduleSpec {
            kind: ClipScheduleKind::Constant,
            base_c: c,
        }
    }

    #[test]
    fn alpha_rule_cases() {
        assert_eq!(alpha_for_shape(768, 768), 1.0);
        assert!((alpha_for_shape(3072, 768) - 2.0).abs() < 1e-15);
        assert_eq!(alpha_for_shape(768, 3072), 1.0);
    }

    #[test]
    fn inactive_clipping_reduces_to_plain_step() {
        let mut cfg = SpectraConfig::recommended(constant_schedule(0.1, 10), constant_clip(100.0));
        cfg.weight_decay_lambda = 0.0;
        cfg.alpha_rule = AlphaRule::Fixed(1.0);
        let base = BaseOptimizerSpec::sgdm(1.0);
        let param = dense_from_rows(2, 2, &[1.0, 0.0, 0.0, 1.0]).unwrap();
        let grad = dense_from_rows(2, 2, &[0.5, -0.2, 0.1, 0.3]).unwrap();
        let mut state = OptimizerState::new(2, 2, &base);
        let next = spectra_step(&param, &grad, &mut state, &base, &cfg, 0).unwrap();
        let expect = &param - &grad * 0.1;
        assert!((next - expect).norm() < 1e-12);
    }

    #[test]
    fn pure_decay_with_zero_gradient() {
        let cfg = SpectraConfig::recommended(constant_schedule(0.1, 10), constant_clip(10.0));
        let base = BaseOptimizerSpec::signum(1.0, false);
        let param = dense_from_rows(2, 2, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let grad = DenseMatrix::zeros(2, 2);
        let mut state = OptimizerState::new(2, 2, &base);
        let next = spectra_step(&param, &grad, &mut state, &base, &cfg, 0).unwrap();
        let shrink = 1.0 - 0.1 * 0.1;
        assert!((next - &param * shrink).norm() < 1e-12);
    }

    #[test]
    fn clipped_update_respects_norm_ceiling() {
        let mut cfg = SpectraConfig::recommended(constant_schedule(0.05, 50), constant_clip(0.5));
        cfg.post_clip_c = 0.5;
        cfg.alpha_rule = AlphaRule::Fixed(1.0);
        let base = BaseOptimizerSpec::signum(0.5, false);
        let mut param = dense_from_rows(3, 3, &[1.0, 0.2, -0.4, 0.0, 2.0, 0.3, 0.5, -0.1, 1.5])
            .unwrap();
        let mut state = OptimizerState::new(3, 3, &base);
        for k in 0..5 {
            let grad = &param * 0.3;
            let next = spectra_step(&param, &grad, &mut state, &base, &cfg, k).unwrap();
            let decayed = &param * (1.0 - 0.1 * 0.05);
            let step_norm = spectral_norm(&(&next - decayed));
            assert!(step_norm <= 0.05 * (0.5 + 1e-6));
            param = next;
        }
    }

    #[test]
    fn step_counter_mismatch_is_rejected() {
        let cfg = SpectraConfig::recommended(constant_schedule(0.1, 10), constant_clip(10.0));
        let base = BaseOptimizerSpec::sgdm(1.0);
        let param = DenseMatrix::zeros(2, 2);
        let mut state = OptimizerState::new(2, 2, &base);
        assert!(spectra_step(&param, &param, &mut state, &base, &cfg, 3).is_err());
    }

    #[test]
    fn audit_counts_violations() {
        let small = dense_from_rows(2, 2, &[0.1, 0.0, 0.0, 0.05]).unwrap();
        let big = dense_from_rows(2, 2, &[3.0, 0.0, 0.0, 0.5]).unwrap();
        let report =
            update_norm_ceiling_audit(&[small, big], 1.0, &[1.0, 1.0]).unwrap();
        assert_eq!(report.ceiling_violations, 1);
        assert!((report.records[1].max_singular - 3.0).abs() < 1e-9);
        assert!((report.records[1].condition - 6.0).abs() < 1e-9);
    }
}
