//! The ε-approximation pipeline: schedule, reweight, solve, round.

use std::fmt;
use std::str::FromStr;

use crate::bounds::schedule_eta_eps;
use crate::error::{OtError, Result};
use crate::rounding::{reweight_marginals, round_to_polytope};
use crate::scaling::scaling_matrix;
use crate::solvers::accel::{apdagd_with_budget, apdamd_with_budget};
use crate::solvers::greenkhorn::greenkhorn_with_budget;
use crate::solvers::sinkhorn::sinkhorn_with_budget;
use crate::solvers::{
    ScaledSqEuclidean, SolverTrace, DEFAULT_MAX_ACCEL_ITERS, DEFAULT_MAX_COORD_ITERS,
};
use crate::types::{
    ConstraintOperator, CostMatrix, Histogram, RegularizedInstance, TransportPlan, FEASIBILITY_TOL,
};

/// Solver selector for the approximation pipeline and the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Sinkhorn,
    Greenkhorn,
    Apdamd,
    Apdagd,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Sinkhorn,
        Method::Greenkhorn,
        Method::Apdamd,
        Method::Apdagd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Sinkhorn => "sinkhorn",
            Method::Greenkhorn => "greenkhorn",
            Method::Apdamd => "apdamd",
            Method::Apdagd => "apdagd",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = OtError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sinkhorn" => Ok(Method::Sinkhorn),
            "greenkhorn" => Ok(Method::Greenkhorn),
            "apdamd" => Ok(Method::Apdamd),
            "apdagd" => Ok(Method::Apdagd),
            other => Err(OtError::Domain(format!(
                "unknown method '{other}' (expected sinkhorn, greenkhorn, apdamd or apdagd)"
            ))),
        }
    }
}

/// Output of the approximation pipeline: an exactly feasible plan, its cost,
/// the inner solver trace and the (η, ε′) schedule that produced it.
#[derive(Debug, Clone)]
pub struct ApproxResult {
    pub plan: TransportPlan,
    pub cost: f64,
    pub trace: SolverTrace,
    pub eta: f64,
    pub eps_prime: f64,
}

/// ε-approximate OT with default iteration safeguards.
///
/// Schedules (η, ε′), reweights the marginals, runs `method` to tolerance
/// ε′/2 on the reweighted instance, and rounds the solver plan back onto the
/// polytope of the original (r, c). The result satisfies
/// ⟨C, X̂⟩ ≤ ⟨C, X*⟩ + ε.
pub fn approx_ot(
    cost: &CostMatrix,
    r: &Histogram,
    c: &Histogram,
    eps: f64,
    method: Method,
) -> Result<ApproxResult> {
    approx_ot_with_budget(cost, r, c, eps, method, None, None)
}

pub fn approx_ot_with_budget(
    cost: &CostMatrix,
    r: &Histogram,
    c: &Histogram,
    eps: f64,
    method: Method,
    max_iter: Option<usize>,
    max_seconds: Option<f64>,
) -> Result<ApproxResult> {
    approx_ot_custom(cost, r, c, eps, None, method, max_iter, max_seconds)
}

/// Pipeline with an optional η override (the CLI's `--eta`); ε′ and the
/// reweighting still follow the ε schedule, so the output stays exactly
/// feasible either way.
#[allow(clippy::too_many_arguments)]
pub fn approx_ot_custom(
    cost: &CostMatrix,
    r: &Histogram,
    c: &Histogram,
    eps: f64,
    eta_override: Option<f64>,
    method: Method,
    max_iter: Option<usize>,
    max_seconds: Option<f64>,
) -> Result<ApproxResult> {
    let n = cost.n();
    if r.len() != n || c.len() != n {
        return Err(OtError::DimensionMismatch(format!(
            "approx_ot: cost is {n}x{n}, marginals have {} and {} atoms",
            r.len(),
            c.len()
        )));
    }
    let (eta, eps_prime) = schedule_eta_eps(eps, n, cost.max_abs())?;
    let eta = eta_override.unwrap_or(eta);
    approx_with_schedule(cost, r, c, eta, eps_prime, method, max_iter, max_seconds)
}

#[allow(clippy::too_many_arguments)]
fn approx_with_schedule(
    cost: &CostMatrix,
    r: &Histogram,
    c: &Histogram,
    eta: f64,
    eps_prime: f64,
    method: Method,
    max_iter: Option<usize>,
    max_seconds: Option<f64>,
) -> Result<ApproxResult> {
    let (r_tilde, c_tilde) = reweight_marginals(r, c, eps_prime)?;
    let inst = RegularizedInstance::new(cost.clone(), r_tilde, c_tilde, eta)?;
    let inner_tol = eps_prime / 2.0;

    let (solver_plan, trace) = match method {
        Method::Sinkhorn | Method::Greenkhorn => {
            let max_iter = max_iter.unwrap_or(DEFAULT_MAX_COORD_ITERS);
            let (pots, trace) = if method == Method::Sinkhorn {
                sinkhorn_with_budget(&inst, inner_tol, max_iter, max_seconds)?
            } else {
                greenkhorn_with_budget(&inst, inner_tol, max_iter, max_seconds)?
            };
            (scaling_matrix(&pots, &inst)?, trace)
        }
        Method::Apdamd => {
            let max_iter = max_iter.unwrap_or(DEFAULT_MAX_ACCEL_ITERS);
            let cons = ConstraintOperator::for_instance(&inst);
            let mirror = ScaledSqEuclidean::standard(inst.n());
            let sol = apdamd_with_budget(&inst, &cons, &mirror, inner_tol, max_iter, max_seconds)?;
            (sol.plan, sol.trace)
        }
        Method::Apdagd => {
            let max_iter = max_iter.unwrap_or(DEFAULT_MAX_ACCEL_ITERS);
            let cons = ConstraintOperator::for_instance(&inst);
            let sol = apdagd_with_budget(&inst, &cons, inner_tol, max_iter, max_seconds)?;
            (sol.plan, sol.trace)
        }
    };
    if !trace.converged() {
        return Err(OtError::SolverFailed {
            solver: method.name(),
            reason: format!(
                "{} after {} iterations (residual {:?})",
                trace.status.as_str(),
                trace.iterations(),
                trace.final_residual()
            ),
        });
    }
    let rounded = round_to_polytope(&solver_plan, r, c)?;
    debug_assert!(rounded.is_feasible_for(r, c, FEASIBILITY_TOL));
    let value = rounded.cost(cost);
    Ok(ApproxResult {
        plan: rounded,
        cost: value,
        trace,
        eta,
        eps_prime,
    })
}
