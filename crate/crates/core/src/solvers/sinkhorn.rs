//! Log-domain Sinkhorn: alternating full row and column sweeps.
//!
//! One iteration is one sweep (all rows or all columns). A sweep sets the
//! swept side's marginals exactly; the opposite side's ℓ1 error is what E
//! measures next.

use std::time::Instant;

use crate::error::Result;
use crate::numeric::logsumexp_by;
use crate::solvers::{require_positive_marginals, SolverStatus, SolverTrace, TraceRecord};
use crate::types::{DualPotentials, RegularizedInstance};

/// Alternating-sweep Sinkhorn, stopping at E ≤ eps_prime.
///
/// Exhausting `max_iter` is not an error: the trace reports `MaxIterations`
/// with the last iterate.
pub fn sinkhorn(
    inst: &RegularizedInstance,
    eps_prime: f64,
    max_iter: usize,
) -> Result<(DualPotentials, SolverTrace)> {
    run(inst, eps_prime, max_iter, None, true)
}

/// Trace-free variant for reference computations with huge sweep budgets.
pub(crate) fn sinkhorn_quiet(
    inst: &RegularizedInstance,
    eps_prime: f64,
    max_iter: usize,
) -> Result<(DualPotentials, SolverStatus)> {
    let (pots, trace) = run(inst, eps_prime, max_iter, None, false)?;
    Ok((pots, trace.status))
}

pub fn sinkhorn_with_budget(
    inst: &RegularizedInstance,
    eps_prime: f64,
    max_iter: usize,
    max_seconds: Option<f64>,
) -> Result<(DualPotentials, SolverTrace)> {
    run(inst, eps_prime, max_iter, max_seconds, true)
}

fn run(
    inst: &RegularizedInstance,
    eps_prime: f64,
    max_iter: usize,
    max_seconds: Option<f64>,
    record: bool,
) -> Result<(DualPotentials, SolverTrace)> {
    require_positive_marginals(inst)?;
    let n = inst.n();
    let r = inst.row_marginal.weights();
    let c = inst.col_marginal.weights();
    let log_r: Vec<f64> = r.iter().map(|x| x.ln()).collect();
    let log_c: Vec<f64> = c.iter().map(|x| x.ln()).collect();
    // kernel logs −C/η, row-major
    let klog: Vec<f64> = inst.cost.as_slice().iter().map(|x| -x / inst.eta).collect();

    let mut u = vec![0.0; n];
    let mut v = vec![0.0; n];
    let start = Instant::now();
    let mut trace = SolverTrace::new();

    for t in 1..=max_iter {
        if !t.is_multiple_of(2) {
            for i in 0..n {
                u[i] = log_r[i] - logsumexp_by(n, |j| klog[i * n + j] + v[j]);
            }
        } else {
            for j in 0..n {
                v[j] = log_c[j] - logsumexp_by(n, |i| klog[i * n + j] + u[i]);
            }
        }

        // honest marginal sums of B(u, v), log-domain
        let mut e = 0.0;
        let mut total = 0.0;
        for i in 0..n {
            let s = (u[i] + logsumexp_by(n, |j| klog[i * n + j] + v[j])).exp();
            e += (s - r[i]).abs();
            total += s;
        }
        for j in 0..n {
            let s = (v[j] + logsumexp_by(n, |i| klog[i * n + j] + u[i])).exp();
            e += (s - c[j]).abs();
        }
        if !e.is_finite() || !total.is_finite() {
            trace.status = SolverStatus::NumericalFailure;
            break;
        }
        if record {
            let dual = total
                - u.iter().zip(r).map(|(a, b)| a * b).sum::<f64>()
                - v.iter().zip(c).map(|(a, b)| a * b).sum::<f64>();
            trace.push(TraceRecord {
                iter: t,
                residual: e,
                dual_value: dual,
                ls_doublings: 0,
                oracle_calls: 0,
                ls_m: 0.0,
                accum: 0.0,
                elapsed: start.elapsed().as_secs_f64(),
            });
        }
        if e <= eps_prime {
            trace.status = SolverStatus::Converged;
            break;
        }
        if let Some(budget) = max_seconds {
            if start.elapsed().as_secs_f64() > budget {
                trace.status = SolverStatus::MaxIterations;
                break;
            }
        }
    }
    Ok((DualPotentials::new(u, v)?, trace))
}
