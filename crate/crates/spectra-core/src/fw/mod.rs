//! Composite Frank-Wolfe over the spectral-norm ball: the linear-minimization
//! oracle family, the momentum-averaged driver, the equivalence check against
//! the clipped update rule, and the momentum-coefficient audit.

pub mod audit;
pub mod cfw;
pub mod lmo;

pub use audit::{momentum_coefficient_audit, MomentumAudit};
pub use cfw::{cfw_run, equivalence_check, momentum_update, BetaSchedule, CfwTrajectory};
pub use lmo::{
    fw_params_from_problem, lmo_entropy, lmo_for, lmo_frobenius, lmo_linf_approx, lmo_nuclear,
    lmo_objective, lmo_schatten_p, lmo_spectral_ball, FwParams, RegularizerKind, RegularizerSpec,
    SpectralBall,
};
