//! Marginal reweighting and rounding onto the transportation polytope.

use crate::error::{OtError, Result};
use crate::types::{Histogram, TransportPlan};

/// Pulls both marginals toward uniform:
/// (r̃, c̃) = (1 − ε′/8)(r, c) + (ε′/8n)(1, 1).
///
/// Every output entry is at least ε′/(8n), which makes the dual bound R
/// finite; the ℓ1 perturbation is at most ε′/4 per marginal.
pub fn reweight_marginals(
    r: &Histogram,
    c: &Histogram,
    eps_prime: f64,
) -> Result<(Histogram, Histogram)> {
    if !eps_prime.is_finite() || eps_prime <= 0.0 {
        return Err(OtError::Domain(format!(
            "reweight_marginals: eps_prime = {eps_prime}, must be > 0"
        )));
    }
    if eps_prime >= 8.0 {
        return Err(OtError::Domain(format!(
            "reweight_marginals: eps_prime = {eps_prime} >= 8 makes the blend weight negative"
        )));
    }
    let n = r.len();
    let keep = 1.0 - eps_prime / 8.0;
    let floor = eps_prime / (8.0 * n as f64);
    let blend = |h: &Histogram| -> Result<Histogram> {
        Histogram::new(h.weights().iter().map(|w| keep * w + floor).collect())
    };
    Ok((blend(r)?, blend(c)?))
}

/// Rounds a nonnegative matrix onto the transportation polytope of (r, c):
/// scale rows down to their targets, then columns, then distribute the missing
/// mass as the rank-one outer product of the marginal deficits.
///
/// The output is exactly feasible, and ‖X̂ − X‖₁ ≤ 2(‖r(X) − r‖₁ + ‖c(X) − c‖₁).
pub fn round_to_polytope(x: &TransportPlan, r: &Histogram, c: &Histogram) -> Result<TransportPlan> {
    let n = x.n();
    if r.len() != n || c.len() != n {
        return Err(OtError::DimensionMismatch(format!(
            "round: plan is {n}x{n}, marginals have {} and {} atoms",
            r.len(),
            c.len()
        )));
    }
    let mut out = x.as_slice().to_vec();

    let row_sums = x.row_sums();
    for i in 0..n {
        let target = r.weights()[i];
        if row_sums[i] > target {
            let scale = target / row_sums[i];
            for e in &mut out[i * n..(i + 1) * n] {
                *e *= scale;
            }
        }
    }

    let mut col_sums = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            col_sums[j] += out[i * n + j];
        }
    }
    for j in 0..n {
        let target = c.weights()[j];
        if col_sums[j] > target {
            let scale = target / col_sums[j];
            for i in 0..n {
                out[i * n + j] *= scale;
            }
        }
    }

    // marginal deficits after the scalings; both total the same missing mass
    let mut err_r = vec![0.0; n];
    let mut err_c = c.weights().to_vec();
    for i in 0..n {
        let mut s = 0.0;
        for j in 0..n {
            s += out[i * n + j];
            err_c[j] -= out[i * n + j];
        }
        err_r[i] = r.weights()[i] - s;
    }
    let missing: f64 = err_r.iter().sum();
    if missing > 0.0 {
        let inv = 1.0 / missing;
        for i in 0..n {
            if err_r[i] == 0.0 {
                continue;
            }
            let w = err_r[i] * inv;
            for j in 0..n {
                out[i * n + j] += w * err_c[j];
            }
        }
    }
    // scaling down then adding nonnegative corrections keeps entries >= 0 up
    // to float noise; clamp the noise so the plan type invariant holds
    for e in &mut out {
        if *e < 0.0 {
            debug_assert!(*e > -1e-15);
            *e = 0.0;
        }
    }
    TransportPlan::new(out, n)
}
