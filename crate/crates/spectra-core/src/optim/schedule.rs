use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Learning-rate schedule shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Constant,
    Cosine,
    Wsd,
    /// Frank-Wolfe harmonic step size `eta_k = base_lr * 2 / (k + 2)`,
    /// with `base_lr = 1 / lambda` so that `lambda * eta_k = 2 / (k + 2)`.
    FwHarmonic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSpec {
    pub kind: ScheduleKind,
    pub base_lr: f64,
    #[serde(default)]
    pub warmup_steps: usize,
    pub total_steps: usize,
    /// Fraction of `base_lr` reached at the end of the decay phase.
    #[serde(default)]
    pub final_lr_fraction: f64,
    /// End of the constant phase as a fraction of `total_steps` (wsd only).
    #[serde(default = "default_stable_fraction")]
    pub stable_fraction: f64,
}

fn default_stable_fraction() -> f64 {
    0.8
}

impl ScheduleSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.base_lr > 0.0) {
            return Err(Error::InvalidSpec("base_lr must be positive".into()));
        }
        if self.total_steps == 0 || self.warmup_steps >= self.total_steps {
            return Err(Error::InvalidSpec(
                "warmup_steps must be smaller than total_steps".into(),
            ));
        }
        if !(self.stable_fraction > 0.0 && self.stable_fraction <= 1.0) {
            return Err(Error::InvalidSpec("stable_fraction must be in (0, 1]".into()));
        }
        if self.final_lr_fraction < 0.0 {
            return Err(Error::InvalidSpec("final_lr_fraction must be >= 0".into()));
        }
        Ok(())
    }

    /// End of the wsd stable phase in steps.
    pub fn end_stable(&self) -> usize {
        ((self.total_steps as f64) * self.stable_fraction).round() as usize
    }
}

/// Learning rate at step `k` under the given schedule.
pub fn lr_at(spec: &ScheduleSpec, k: usize) -> Result<f64> {
    spec.validate()?;
    if k >= spec.total_steps {
        return Err(Error::OutOfRange {
            k,
            total: spec.total_steps,
        });
    }
    if spec.kind == ScheduleKind::FwHarmonic {
        return Ok(spec.base_lr * 2.0 / (k as f64 + 2.0));
    }
    // Linear warmup reaching base_lr at the last warmup step.
    if k < spec.warmup_steps {
        return Ok(spec.base_lr * (k + 1) as f64 / spec.warmup_steps as f64);
    }
    let final_lr = spec.final_lr_fraction * spec.base_lr;
    match spec.kind {
        ScheduleKind::Constant => Ok(spec.base_lr),
        ScheduleKind::Cosine => {
            let span = (spec.total_steps - 1).saturating_sub(spec.warmup_steps).max(1);
            let t = (k - spec.warmup_steps) as f64 / span as f64;
            Ok(final_lr
                + (spec.base_lr - final_lr) * 0.5 * (1.0 + (std::f64::consts::PI * t).cos()))
        }
        ScheduleKind::Wsd => {
            let end_stable = spec.end_stable().max(spec.warmup_steps);
            if k < end_stable {
                Ok(spec.base_lr)
            } else {
                let span = (spec.total_steps - end_stable).max(1);
                let t = (k - end_stable) as f64 / span as f64;
                Ok(spec.base_lr * (1.0 - (1.0 - spec.final_lr_fraction) * t.sqrt()))
            }
        }
        ScheduleKind::FwHarmonic => unreachable!(),
    }
}

/// Clipping-threshold schedule shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClipScheduleKind {
    Standard,
    WsdSqrt,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClipScheduleSpec {
    pub kind: ClipScheduleKind,
    pub base_c: f64,
}

impl ClipScheduleSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.base_c > 0.0) {
            return Err(Error::InvalidSpec("base_c must be positive".into()));
        }
        Ok(())
    }
}

/// Clipping threshold at step `k`. During warmup the threshold is scaled
/// inversely with the learning rate to keep the update capacity `c_k eta_k`
/// constant; the wsd_sqrt variant additionally decays with a square-root
/// tail after the stable phase.
#[allow(clippy::too_many_arguments)]
pub fn clip_at(
    spec: &ClipScheduleSpec,
    k: usize,
    eta_k: f64,
    eta_base: f64,
    warmup: usize,
    end_stable: usize,
    total: usize,
) -> Result<f64> {
    spec.validate()?;
    if !(eta_k > 0.0) {
        return Err(Error::InvalidSpec("eta_k must be positive".into()));
    }
    let c = spec.base_c;
    Ok(match spec.kind {
        ClipScheduleKind::Constant => c,
        ClipScheduleKind::Standard => {
            if k <= warmup && warmup > 0 {
                c * eta_base / eta_k
            } else {
                c
            }
        }
        ClipScheduleKind::WsdSqrt => {
            if k <= warmup && warmup > 0 {
                c * eta_base / eta_k
            } else if k <= end_stable {
                c
            } else {
                let span = (total - end_stable).max(1);
                let t = (k - end_stable) as f64 / span as f64;
                (c * (1.0 - t.sqrt())).max(0.0)
            }
        }
    })
}
