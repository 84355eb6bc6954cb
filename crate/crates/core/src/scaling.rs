//! The (u, v)-parameterized dual of entropic OT.
//!
//! B(u, v) = diag(e^u) e^{−C/η} diag(e^v), entrywise
//! B_ij = e^{u_i + v_j − C_ij/η}, and
//! f(u, v) = 1ᵀ B(u, v) 1 − ⟨u, r⟩ − ⟨v, c⟩.
//!
//! All exponential sums are max-subtracted (see [`crate::numeric`]); u and v
//! are always logs, never materialized scalings.

use crate::error::{OtError, Result};
use crate::numeric::{dot, logsumexp_by, EXP_OVERFLOW_LIMIT};
use crate::types::{DualPotentials, RegularizedInstance, TransportPlan};

fn check_dims(pots: &DualPotentials, inst: &RegularizedInstance) -> Result<()> {
    if pots.n() != inst.n() {
        return Err(OtError::DimensionMismatch(format!(
            "potentials have {} atoms, instance has {}",
            pots.n(),
            inst.n()
        )));
    }
    Ok(())
}

/// Log-entries of B(u, v): u_i + v_j − C_ij/η.
#[inline]
fn log_entry(pots: &DualPotentials, inst: &RegularizedInstance, i: usize, j: usize) -> f64 {
    pots.u()[i] + pots.v()[j] - inst.cost.at(i, j) / inst.eta
}

/// The scaling matrix B(u, v).
///
/// Entries are computed as exponentials of the log-matrix; underflow to zero
/// is benign, an overflowing exponent is an error naming the entry.
pub fn scaling_matrix(pots: &DualPotentials, inst: &RegularizedInstance) -> Result<TransportPlan> {
    check_dims(pots, inst)?;
    let n = inst.n();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let e = log_entry(pots, inst, i, j);
            if e > EXP_OVERFLOW_LIMIT {
                return Err(OtError::Overflow {
                    exponent: e,
                    row: i,
                    col: j,
                });
            }
            entries[i * n + j] = e.exp();
        }
    }
    TransportPlan::new(entries, n)
}

/// Log row sums of B(u, v): log Σ_j e^{u_i + v_j − C_ij/η}.
pub(crate) fn log_row_sums(pots: &DualPotentials, inst: &RegularizedInstance) -> Vec<f64> {
    let n = inst.n();
    (0..n)
        .map(|i| logsumexp_by(n, |j| log_entry(pots, inst, i, j)))
        .collect()
}

pub(crate) fn log_col_sums(pots: &DualPotentials, inst: &RegularizedInstance) -> Vec<f64> {
    let n = inst.n();
    (0..n)
        .map(|j| logsumexp_by(n, |i| log_entry(pots, inst, i, j)))
        .collect()
}

fn exp_checked(log_sum: f64, which: &'static str, idx: usize) -> Result<f64> {
    if log_sum > EXP_OVERFLOW_LIMIT {
        return Err(OtError::Overflow {
            exponent: log_sum,
            row: if which == "row" { idx } else { usize::MAX },
            col: if which == "col" { idx } else { usize::MAX },
        });
    }
    Ok(log_sum.exp())
}

/// Dual objective f(u, v) = 1ᵀB(u,v)1 − ⟨u, r⟩ − ⟨v, c⟩.
pub fn dual_f(pots: &DualPotentials, inst: &RegularizedInstance) -> Result<f64> {
    check_dims(pots, inst)?;
    let n = inst.n();
    let log_total = logsumexp_by(n * n, |k| log_entry(pots, inst, k / n, k % n));
    if log_total > EXP_OVERFLOW_LIMIT {
        return Err(OtError::Overflow {
            exponent: log_total,
            row: usize::MAX,
            col: usize::MAX,
        });
    }
    Ok(log_total.exp()
        - dot(pots.u(), inst.row_marginal.weights())
        - dot(pots.v(), inst.col_marginal.weights()))
}

/// Gradient of f as the pair of marginal residuals
/// (B(u,v)·1 − r, B(u,v)ᵀ·1 − c).
pub fn grad_f(pots: &DualPotentials, inst: &RegularizedInstance) -> Result<(Vec<f64>, Vec<f64>)> {
    check_dims(pots, inst)?;
    let r = inst.row_marginal.weights();
    let c = inst.col_marginal.weights();
    let mut row = Vec::with_capacity(inst.n());
    for (i, ls) in log_row_sums(pots, inst).into_iter().enumerate() {
        row.push(exp_checked(ls, "row", i)? - r[i]);
    }
    let mut col = Vec::with_capacity(inst.n());
    for (j, ls) in log_col_sums(pots, inst).into_iter().enumerate() {
        col.push(exp_checked(ls, "col", j)? - c[j]);
    }
    Ok((row, col))
}

/// E(u, v) = ‖r(B) − r‖₁ + ‖c(B) − c‖₁, the Sinkhorn-family stopping quantity.
pub fn residual_e(pots: &DualPotentials, inst: &RegularizedInstance) -> Result<f64> {
    let (row, col) = grad_f(pots, inst)?;
    Ok(row.iter().map(|x| x.abs()).sum::<f64>() + col.iter().map(|x| x.abs()).sum::<f64>())
}

/// Greenkhorn gain ρ(a, b) = b − a + a log(a/b) for a ≥ 0, b > 0,
/// with the limit convention ρ(0, b) = b.
pub fn gain_rho(a: f64, b: f64) -> Result<f64> {
    if !b.is_finite() || b <= 0.0 {
        return Err(OtError::Domain(format!("gain_rho: b = {b}, must be > 0")));
    }
    if !a.is_finite() || a < 0.0 {
        return Err(OtError::Domain(format!("gain_rho: a = {a}, must be >= 0")));
    }
    if a == 0.0 {
        return Ok(b);
    }
    Ok(b - a + a * (a / b).ln())
}
