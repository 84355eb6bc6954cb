//! Exact reference solutions at desk scale.

mod simplex;

use crate::error::{OtError, Result};
use crate::scaling::{dual_f, residual_e};
use crate::solvers::{sinkhorn_quiet, SolverStatus};
use crate::types::{CostMatrix, DualPotentials, Histogram, RegularizedInstance, TransportPlan};

/// Largest n the exact oracle accepts.
pub const EXACT_SIZE_LIMIT: usize = 256;

/// An exact optimum of the unregularized transportation LP.
#[derive(Debug, Clone)]
pub struct ExactSolution {
    /// Optimal vertex of the transportation polytope.
    pub plan: TransportPlan,
    /// ⟨C, X*⟩.
    pub value: f64,
    /// Optimal potentials (u, v); complementary slackness and dual
    /// feasibility hold within 1e-9 when present.
    pub dual_certificate: Option<DualPotentials>,
}

/// Exact optimum of min ⟨C, X⟩ over the transportation polytope of (r, c).
pub fn exact_ot(cost: &CostMatrix, r: &Histogram, c: &Histogram) -> Result<ExactSolution> {
    let n = cost.n();
    if n > EXACT_SIZE_LIMIT {
        return Err(OtError::TooLarge {
            n,
            limit: EXACT_SIZE_LIMIT,
        });
    }
    if r.len() != n || c.len() != n {
        return Err(OtError::DimensionMismatch(format!(
            "exact_ot: cost is {n}x{n}, marginals have {} and {} atoms",
            r.len(),
            c.len()
        )));
    }
    let sol = simplex::solve_transportation(cost, r, c)?;
    Ok(ExactSolution {
        plan: TransportPlan::new(sol.flow, n)?,
        value: sol.value,
        dual_certificate: Some(DualPotentials::new(sol.u, sol.v)?),
    })
}

/// High-precision regularized dual optimum: Sinkhorn until E ≤ tol.
///
/// Returns the potentials and f(u, v) as the reference optimum f*.
pub fn reference_dual_optimum(
    inst: &RegularizedInstance,
    tol: f64,
) -> Result<(DualPotentials, f64)> {
    if tol.is_nan() || tol < 1e-12 {
        return Err(OtError::Domain(format!(
            "reference_dual_optimum: tol = {tol}, must be >= 1e-12"
        )));
    }
    const MAX_SWEEPS: usize = 10_000_000;
    let (pots, status) = sinkhorn_quiet(inst, tol, MAX_SWEEPS)?;
    if status != SolverStatus::Converged {
        return Err(OtError::SolverFailed {
            solver: "reference sinkhorn",
            reason: format!("E > {tol} after {MAX_SWEEPS} sweeps"),
        });
    }
    debug_assert!(residual_e(&pots, inst)? <= tol);
    let f_star = dual_f(&pots, inst)?;
    Ok((pots, f_star))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(w: &[f64]) -> Histogram {
        Histogram::new(w.to_vec()).unwrap()
    }

    #[test]
    fn zero_cost_matching() {
        let cost = CostMatrix::new(vec![0.0, 1.0, 1.0, 0.0], 2).unwrap();
        let sol = exact_ot(&cost, &Histogram::uniform(2), &Histogram::uniform(2)).unwrap();
        assert!(sol.value.abs() <= 1e-12);
        assert!((sol.plan.at(0, 0) - 0.5).abs() <= 1e-12);
        assert!((sol.plan.at(1, 1) - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn constant_cost_value_is_one() {
        let mut rng = crate::rng::Rng::seed_from_u64(31);
        for n in [2usize, 5, 9] {
            let cost = CostMatrix::new(vec![1.0; n * n], n).unwrap();
            let r = Histogram::normalized((0..n).map(|_| rng.uniform(0.1, 1.0)).collect()).unwrap();
            let c = Histogram::normalized((0..n).map(|_| rng.uniform(0.1, 1.0)).collect()).unwrap();
            let sol = exact_ot(&cost, &r, &c).unwrap();
            assert!((sol.value - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn two_by_two_lp_reduction() {
        let cost = CostMatrix::new(vec![0.0, 2.0, 1.0, 0.0], 2).unwrap();
        let sol = exact_ot(&cost, &h(&[0.8, 0.2]), &h(&[0.3, 0.7])).unwrap();
        assert!((sol.value - 1.0).abs() <= 1e-12);
        let want = [0.3, 0.5, 0.0, 0.2];
        for (f, w) in sol.plan.as_slice().iter().zip(want) {
            assert!((f - w).abs() <= 1e-12);
        }
    }

    #[test]
    fn size_guard() {
        let n = EXACT_SIZE_LIMIT + 1;
        let cost = CostMatrix::new(vec![0.0; n * n], n).unwrap();
        match exact_ot(&cost, &Histogram::uniform(n), &Histogram::uniform(n)) {
            Err(OtError::TooLarge { .. }) => {}
            other => panic!("expected size guard, got {:?}", other.map(|s| s.value)),
        }
    }

    #[test]
    fn lower_bounds_any_feasible_plan() {
        let mut rng = crate::rng::Rng::seed_from_u64(8);
        for _ in 0..20 {
            let n = 2 + rng.below(6);
            let cost =
                CostMatrix::new((0..n * n).map(|_| rng.uniform(0.0, 5.0)).collect(), n).unwrap();
            let r = Histogram::uniform(n);
            let c = Histogram::uniform(n);
            let sol = exact_ot(&cost, &r, &c).unwrap();
            // product coupling r cᵀ is feasible
            let product: Vec<f64> = (0..n * n)
                .map(|k| r.weights()[k / n] * c.weights()[k % n])
                .collect();
            let prod_cost: f64 = product
                .iter()
                .zip(cost.as_slice())
                .map(|(x, cc)| x * cc)
                .sum();
            assert!(sol.value <= prod_cost + 1e-9);
        }
    }

    #[test]
    fn invariant_under_simultaneous_permutation() {
        let mut rng = crate::rng::Rng::seed_from_u64(64);
        let n = 5;
        let cost_vec: Vec<f64> = (0..n * n).map(|_| rng.uniform(0.0, 3.0)).collect();
        let r = Histogram::normalized((0..n).map(|_| rng.uniform(0.1, 1.0)).collect()).unwrap();
        let c = Histogram::normalized((0..n).map(|_| rng.uniform(0.1, 1.0)).collect()).unwrap();
        let base = exact_ot(&CostMatrix::new(cost_vec.clone(), n).unwrap(), &r, &c).unwrap();

        let perm = [3usize, 0, 4, 1, 2];
        let mut pc = vec![0.0; n * n];
        let mut pr = vec![0.0; n];
        let mut pcl = vec![0.0; n];
        for i in 0..n {
            pr[i] = r.weights()[perm[i]];
            pcl[i] = c.weights()[perm[i]];
            for j in 0..n {
                pc[i * n + j] = cost_vec[perm[i] * n + perm[j]];
            }
        }
        let permuted = exact_ot(&CostMatrix::new(pc, n).unwrap(), &h(&pr), &h(&pcl)).unwrap();
        assert!((base.value - permuted.value).abs() <= 1e-10);
    }

    #[test]
    fn reference_optimum_self_consistent() {
        let cost = CostMatrix::new(vec![0.0, 1.0, 1.0, 0.0], 2).unwrap();
        let inst =
            RegularizedInstance::new(cost, Histogram::uniform(2), Histogram::uniform(2), 1.0)
                .unwrap();
        let (_, f8) = reference_dual_optimum(&inst, 1e-8).unwrap();
        let (pots9, f9) = reference_dual_optimum(&inst, 1e-9).unwrap();
        assert!((f8 - f9).abs() < 1e-8);
        assert!(residual_e(&pots9, &inst).unwrap() <= 1e-9);
    }
}
