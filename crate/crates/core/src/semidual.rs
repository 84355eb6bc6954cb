//! The λ = (α, β) dual used by the accelerated solvers.
//!
//! With the simplex constraint 1ᵀX1 = 1 kept in the Lagrangian, the dual is
//! the log-sum-exp
//!
//!   φ(α, β) = η log Σ_ij e^{−(C_ij − α_i − β_j)/η − 1} − ⟨α, r⟩ − ⟨β, c⟩,
//!
//! whose gradient is A·vec(x(λ)) − b for the softmax plan x(λ). The trailing
//! additive constant of the alternative statement is dropped; it moves the
//! value, never the gradient or the argmin.

use crate::error::{OtError, Result};
use crate::types::{ConstraintOperator, DualPotentials, RegularizedInstance, TransportPlan};

fn check_dims(lambda: &DualPotentials, inst: &RegularizedInstance) -> Result<()> {
    if lambda.n() != inst.n() {
        return Err(OtError::DimensionMismatch(format!(
            "duals have {} atoms, instance has {}",
            lambda.n(),
            inst.n()
        )));
    }
    Ok(())
}

/// Log-weights t_ij = (−C_ij + α_i + β_j)/η − 1 and their max.
pub(crate) fn log_weights(
    alpha: &[f64],
    beta: &[f64],
    inst: &RegularizedInstance,
) -> (Vec<f64>, f64) {
    let n = inst.n();
    let inv_eta = 1.0 / inst.eta;
    let mut t = vec![0.0; n * n];
    let mut max = f64::NEG_INFINITY;
    for i in 0..n {
        let ai = alpha[i];
        for j in 0..n {
            let val = (ai + beta[j] - inst.cost.at(i, j)) * inv_eta - 1.0;
            t[i * n + j] = val;
            max = max.max(val);
        }
    }
    (t, max)
}

/// Value of φ at stacked duals; allocation-free (the solvers call this in
/// their line-search inner loop).
pub(crate) fn phi_value(alpha: &[f64], beta: &[f64], inst: &RegularizedInstance, b: &[f64]) -> f64 {
    let n = inst.n();
    let inv_eta = 1.0 / inst.eta;
    let lse = crate::numeric::logsumexp_by(n * n, |k| {
        let (i, j) = (k / n, k % n);
        (alpha[i] + beta[j] - inst.cost.at(i, j)) * inv_eta - 1.0
    });
    let mut lin = 0.0;
    for i in 0..n {
        lin += alpha[i] * b[i] + beta[i] * b[n + i];
    }
    inst.eta * lse - lin
}

/// Value, softmax plan (row-major) and gradient A·x − b in a single pass.
pub(crate) fn phi_value_grad_plan(
    alpha: &[f64],
    beta: &[f64],
    inst: &RegularizedInstance,
    b: &[f64],
) -> (f64, Vec<f64>, Vec<f64>) {
    let n = inst.n();
    let (mut t, max) = log_weights(alpha, beta, inst);
    let mut s = 0.0;
    for x in &mut t {
        *x = (*x - max).exp();
        s += *x;
    }
    let lse = max + s.ln();
    let inv_s = 1.0 / s;
    let mut grad: Vec<f64> = b.iter().map(|x| -x).collect();
    for i in 0..n {
        for j in 0..n {
            let p = t[i * n + j] * inv_s;
            t[i * n + j] = p;
            grad[i] += p;
            grad[n + j] += p;
        }
    }
    let lin = (0..n)
        .map(|i| alpha[i] * b[i] + beta[i] * b[n + i])
        .sum::<f64>();
    (inst.eta * lse - lin, grad, t)
}

/// The log-sum-exp dual φ(α, β); never overflows.
pub fn semi_dual_phi(
    lambda: &DualPotentials,
    inst: &RegularizedInstance,
    constraints: &ConstraintOperator,
) -> Result<f64> {
    check_dims(lambda, inst)?;
    Ok(phi_value(lambda.u(), lambda.v(), inst, constraints.b()))
}

/// Softmax plan x(α, β)_ij = e^{(−C_ij+α_i+β_j)/η − 1} / Σ_kl e^{(−C_kl+α_k+β_l)/η − 1}.
///
/// Entries sum to one by construction.
pub fn primal_from_dual(
    lambda: &DualPotentials,
    inst: &RegularizedInstance,
) -> Result<TransportPlan> {
    check_dims(lambda, inst)?;
    let n = inst.n();
    let (mut t, max) = log_weights(lambda.u(), lambda.v(), inst);
    let mut s = 0.0;
    for x in &mut t {
        *x = (*x - max).exp();
        s += *x;
    }
    for x in &mut t {
        *x /= s;
    }
    TransportPlan::new(t, n)
}

/// ∇φ(λ) = A·vec(x(λ)) − b; its ℓ1 norm is the infeasibility of x(λ).
///
/// With the sign convention of [`semi_dual_phi`] (duals enter the exponent
/// with +), differentiating moves the marginal residual to this orientation;
/// the opposite-sign λ parameterization yields b − A·x.
pub fn grad_phi(
    lambda: &DualPotentials,
    inst: &RegularizedInstance,
    constraints: &ConstraintOperator,
) -> Result<Vec<f64>> {
    check_dims(lambda, inst)?;
    let (_, grad, _) = phi_value_grad_plan(lambda.u(), lambda.v(), inst, constraints.b());
    Ok(grad)
}

/// ⟨C, X⟩ − ηH(X) with H(X) = −Σ X_ij log X_ij and 0·log 0 = 0.
pub fn primal_objective(plan: &TransportPlan, inst: &RegularizedInstance) -> Result<f64> {
    if plan.n() != inst.n() {
        return Err(OtError::DimensionMismatch(format!(
            "plan is {0}x{0}, instance is {1}x{1}",
            plan.n(),
            inst.n()
        )));
    }
    Ok(primal_objective_parts(plan, inst.cost.as_slice(), inst.eta))
}

/// Same objective from raw parts; η = 0 evaluates the plain transport cost.
pub fn primal_objective_parts(plan: &TransportPlan, cost: &[f64], eta: f64) -> f64 {
    let mut linear = 0.0;
    let mut entropy = 0.0;
    for (&x, &c) in plan.as_slice().iter().zip(cost) {
        linear += x * c;
        if x > 0.0 {
            entropy -= x * x.ln();
        }
    }
    linear - eta * entropy
}
