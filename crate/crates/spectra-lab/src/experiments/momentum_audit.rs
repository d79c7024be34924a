//! Momentum-coefficient audit: evaluates the exact error-coefficient
//! recurrences over the configured horizon and checks the normalized
//! maxima against their bounds (3 and 1).

use anyhow::{bail, Result};
use spectra_core::fw::momentum_coefficient_audit;

use crate::config::RunConfig;
use crate::metrics::{Assertion, MetricRecord};

use super::ExperimentOutput;

pub fn run(config: &RunConfig) -> Result<ExperimentOutput> {
    if config.audit_horizon == 0 {
        bail!("audit_horizon must be at least 1");
    }
    let audit = momentum_coefficient_audit(config.audit_horizon)?;

    let mut record = MetricRecord::new("momentum_audit", 0);
    record
        .extra
        .insert("horizon".into(), config.audit_horizon as f64);
    record.extra.insert("max_s_scaled".into(), audit.max_s_scaled);
    record.extra.insert("max_b_scaled".into(), audit.max_b_scaled);

    let assertions = vec![
        Assertion::check(
            "momentum_s_coefficient_bound",
            audit.max_s_scaled <= 3.0,
            format!("max S_k k^(1/3) = {} (bound 3)", audit.max_s_scaled),
        ),
        Assertion::check(
            "momentum_b_coefficient_bound",
            audit.max_b_scaled <= 1.0 + 1e-12,
            format!("max B_k k^(2/3) = {} (bound 1)", audit.max_b_scaled),
        ),
    ];
    Ok(ExperimentOutput {
        records: vec![record],
        assertions,
    })
}
