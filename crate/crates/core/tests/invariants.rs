//! Property tests for the contracts that hold across the crate.

use proptest::prelude::*;

use ot_core::harness::metric_d;
use ot_core::oracle::exact_ot;
use ot_core::rounding::{reweight_marginals, round_to_polytope};
use ot_core::scaling::dual_f;
use ot_core::semidual::semi_dual_phi;
use ot_core::solvers::{approx_ot, Method};
use ot_core::types::{
    ConstraintOperator, CostMatrix, DualPotentials, Histogram, RegularizedInstance, TransportPlan,
    FEASIBILITY_TOL,
};

fn histogram(n: usize) -> impl Strategy<Value = Histogram> {
    proptest::collection::vec(0.05f64..1.0, n).prop_map(|w| Histogram::normalized(w).unwrap())
}

fn cost(n: usize) -> impl Strategy<Value = CostMatrix> {
    proptest::collection::vec(0.0f64..5.0, n * n).prop_map(move |e| CostMatrix::new(e, n).unwrap())
}

proptest! {
    #[test]
    fn dual_objectives_are_shift_invariant(
        c in cost(3),
        r in histogram(3),
        cc in histogram(3),
        u in proptest::collection::vec(-2.0f64..2.0, 3),
        v in proptest::collection::vec(-2.0f64..2.0, 3),
        s in -3.0f64..3.0,
    ) {
        let inst = RegularizedInstance::new(c, r, cc, 0.8).unwrap();
        let cons = ConstraintOperator::for_instance(&inst);
        let base = DualPotentials::new(u.clone(), v.clone()).unwrap();
        let shifted = DualPotentials::new(
            u.iter().map(|x| x + s).collect(),
            v.iter().map(|x| x - s).collect(),
        ).unwrap();

        let f0 = dual_f(&base, &inst).unwrap();
        let f1 = dual_f(&shifted, &inst).unwrap();
        prop_assert!((f0 - f1).abs() <= 1e-12 * f0.abs().max(1.0));

        let p0 = semi_dual_phi(&base, &inst, &cons).unwrap();
        let p1 = semi_dual_phi(&shifted, &inst, &cons).unwrap();
        prop_assert!((p0 - p1).abs() <= 1e-12 * p0.abs().max(1.0));
    }

    #[test]
    fn rounding_is_feasible_and_l1_bounded(
        entries in proptest::collection::vec(0.0f64..1.0, 16),
        r in histogram(4),
        c in histogram(4),
    ) {
        let x = TransportPlan::new(entries, 4).unwrap();
        let rounded = round_to_polytope(&x, &r, &c).unwrap();
        prop_assert!(rounded.is_feasible_for(&r, &c, FEASIBILITY_TOL));
        prop_assert!(rounded.l1_distance(&x) <= 2.0 * metric_d(&x, &r, &c) + 1e-12);
    }

    #[test]
    fn reweighted_marginals_are_floored_histograms(
        r in histogram(5),
        c in histogram(5),
        eps_prime in 1e-3f64..2.0,
    ) {
        let (rt, ct) = reweight_marginals(&r, &c, eps_prime).unwrap();
        let floor = eps_prime / (8.0 * 5.0);
        for h in [&rt, &ct] {
            prop_assert!(h.min_entry() >= floor * (1.0 - 1e-12));
            prop_assert!((h.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn constraint_operator_matches_independent_sums(
        entries in proptest::collection::vec(0.0f64..1.0, 9),
    ) {
        let x = TransportPlan::new(entries, 3).unwrap();
        let op = ConstraintOperator::for_marginals(
            &Histogram::uniform(3),
            &Histogram::uniform(3),
        ).unwrap();
        let ax = op.apply(&x);
        let mut expect = x.row_sums();
        expect.extend(x.col_sums());
        prop_assert_eq!(ax, expect);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn approx_plans_are_feasible_and_lower_bounded_by_exact(
        c in cost(4),
        r in histogram(4),
        cc in histogram(4),
        eps in 0.25f64..2.0,
    ) {
        prop_assume!(c.max_abs() > 0.0);
        let res = approx_ot(&c, &r, &cc, eps, Method::Greenkhorn).unwrap();
        prop_assert!(res.plan.is_feasible_for(&r, &cc, FEASIBILITY_TOL));
        let exact = exact_ot(&c, &r, &cc).unwrap();
        // exact optimum lower-bounds every feasible plan and the gap obeys ε
        prop_assert!(exact.value <= res.cost + 1e-9);
        prop_assert!(res.cost <= exact.value + eps + 1e-9);
    }
}
