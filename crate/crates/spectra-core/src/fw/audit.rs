use crate::error::{Error, Result};

/// Maxima of the normalized momentum-error coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumAudit {
    /// `max_k S_k * k^{1/3}`; bounded by 3.
    pub max_s_scaled: f64,
    /// `max_k B_k * k^{2/3}`; bounded by 1.
    pub max_b_scaled: f64,
}

/// Evaluates the coefficient recurrences
/// `S_k = (1 - beta_{k-1}) S_{k-1} + gamma_{k-1}` and
/// `B_k = (1 - beta_{k-1})^2 B_{k-1} + beta_{k-1}^2`
/// with `gamma_k = 2 / (k + 2)` and `beta_k = 1 / (k + 1)^{2/3}`, starting
/// from `S_1 = B_1 = 1`, and returns the maxima of `S_k k^{1/3}` and
/// `B_k k^{2/3}` over `k <= big_k`.
pub fn momentum_coefficient_audit(big_k: usize) -> Result<MomentumAudit> {
    if big_k == 0 {
        return Err(Error::InvalidSpec("audit horizon must be >= 1".into()));
    }
    let mut s = 1.0f64;
    let mut b = 1.0f64;
    let mut max_s_scaled = s;
    let mut max_b_scaled = b;
    for k in 2..=big_k {
        let prev = (k - 1) as f64;
        // beta_j = 1 / (j + 1)^{2/3}, so the step from k-1 to k uses
        // beta_{k-1} = k^{-2/3}.
        let beta = (prev + 1.0).powf(-2.0 / 3.0);
        let gamma = 2.0 / (prev + 2.0);
        s = (1.0 - beta) * s + gamma;
        b = (1.0 - beta) * (1.0 - beta) * b + beta * beta;
        let kf = k as f64;
        max_s_scaled = max_s_scaled.max(s * kf.powf(1.0 / 3.0));
        max_b_scaled = max_b_scaled.max(b * kf.powf(2.0 / 3.0));
    }
    Ok(MomentumAudit {
        max_s_scaled,
        max_b_scaled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizon_one_is_the_base_case() {
        let a = momentum_coefficient_audit(1).unwrap();
        assert_eq!(a.max_s_scaled, 1.0);
        assert_eq!(a.max_b_scaled, 1.0);
    }

    #[test]
    fn two_step_value_matches_hand_computation() {
        // S_2 = (1 - 2^{-2/3}) * 1 + 2/3 with beta_1 = 2^{-2/3}.
        let beta1 = 2.0f64.powf(-2.0 / 3.0);
        let s2 = (1.0 - beta1) + 2.0 / 3.0;
        let b2 = (1.0 - beta1) * (1.0 - beta1) + beta1 * beta1;
        let a = momentum_coefficient_audit(2).unwrap();
        let s2_scaled = s2 * 2.0f64.powf(1.0 / 3.0);
        let b2_scaled = b2 * 2.0f64.powf(2.0 / 3.0);
        assert!((a.max_s_scaled - s2_scaled.max(1.0)).abs() < 1e-12);
        assert!((a.max_b_scaled - b2_scaled.max(1.0)).abs() < 1e-12);
    }

    #[test]
    fn bounds_hold_over_long_horizons() {
        let a = momentum_coefficient_audit(100_000).unwrap();
        assert!(a.max_s_scaled <= 3.0, "S bound violated: {}", a.max_s_scaled);
        assert!(a.max_b_scaled <= 1.0 + 1e-12, "B bound violated: {}", a.max_b_scaled);
    }

    #[test]
    fn zero_horizon_is_rejected() {
        assert!(momentum_coefficient_audit(0).is_err());
    }
}
