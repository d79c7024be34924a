//! Base optimizer updates, the spectrally-clipped wrapper step, and the
//! learning-rate / clipping-threshold schedules.

pub mod base;
pub mod schedule;
pub mod spectra;

pub use base::{base_update, BaseOptimizerKind, BaseOptimizerSpec, OptimizerState};
pub use schedule::{clip_at, lr_at, ClipScheduleKind, ClipScheduleSpec, ScheduleKind, ScheduleSpec};
pub use spectra::{
    alpha_for_shape, spectra_step, step_scales, update_norm_ceiling_audit, AlphaRule,
    SpectraConfig, StepScales, UpdateNormReport,
};
