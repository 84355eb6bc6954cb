//! Dual-norm bounds and the ε-approximation schedule.

use crate::error::{OtError, Result};
use crate::types::RegularizedInstance;

/// R = η⁻¹‖C‖_∞ + log n − 2 log(min_ij {r_i, c_j}), the ℓ∞ bound on an
/// optimal (u*, v*). Marginals must be strictly positive; the approximation
/// wrappers reweight first.
pub fn bound_r(inst: &RegularizedInstance) -> Result<f64> {
    let min_entry = inst
        .row_marginal
        .min_entry()
        .min(inst.col_marginal.min_entry());
    if min_entry <= 0.0 {
        return Err(OtError::Domain(
            "bound_r: a marginal entry is zero; reweight the marginals first".into(),
        ));
    }
    let n = inst.n() as f64;
    Ok(inst.cost.max_abs() / inst.eta + n.ln() - 2.0 * min_entry.ln())
}

/// R̂ = η(R + ½), the ℓ∞ bound on optimal (α*, β*) of the log-sum-exp dual.
pub fn bound_r_hat(inst: &RegularizedInstance) -> Result<f64> {
    Ok(inst.eta * (bound_r(inst)? + 0.5))
}

/// Schedule constants of the approximation wrappers:
/// η = ε/(4 log n) and ε′ = ε/(8‖C‖_∞).
pub fn schedule_eta_eps(eps: f64, n: usize, c_max: f64) -> Result<(f64, f64)> {
    if !eps.is_finite() || eps <= 0.0 {
        return Err(OtError::Domain(format!(
            "schedule: eps = {eps}, must be > 0"
        )));
    }
    if n < 2 {
        return Err(OtError::Domain(format!(
            "schedule: n = {n}, need at least 2 atoms"
        )));
    }
    if c_max.is_nan() || c_max <= 0.0 {
        return Err(OtError::Domain(
            "schedule: ‖C‖_∞ = 0, every plan has zero cost".into(),
        ));
    }
    let eta = eps / (4.0 * (n as f64).ln());
    let eps_prime = eps / (8.0 * c_max);
    Ok((eta, eps_prime))
}
