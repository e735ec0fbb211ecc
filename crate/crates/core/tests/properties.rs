use proptest::prelude::*;

use exmat::constructors::{
    construct_block, random_block_spec, random_test_matrix, verify_factorization, BlockVariant, Profile,
};
use exmat::exceptionality::{check_exceptional, orthogonality_defect, reduce_canonical, Status};
use exmat::extremal::{extremal_search, norm_objective, SearchBudget};
use exmat::holo::blaschke_scalar;
use exmat::matrix::{operator_norm, random_unitary};
use exmat::{BlaschkeProduct, ComplexMatrix, Tolerances, C64};

fn small() -> SearchBudget {
    SearchBudget { grid_resolution: 8, multistarts: 3, local_iters: 150, ..SearchBudget::default() }
}

fn conjugate(e: &ComplexMatrix, seed: u64) -> ComplexMatrix {
    let u = random_unitary(e.rows(), seed).unwrap();
    u.adjoint().matmul(e).matmul(&u)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn blaschke_products_are_unimodular_on_the_circle(
        zeros in prop::collection::vec((0.0f64..0.99, 0.0f64..6.3), 0..4),
        phase in 0.0f64..6.3,
        theta in 0.0f64..6.3,
    ) {
        let tol = Tolerances::default();
        let zs = zeros.iter().map(|&(r, p)| C64::from_polar(r, p)).collect();
        let b = BlaschkeProduct::new(phase, zs, &tol).unwrap();
        let v = blaschke_scalar(&b, C64::from_polar(1.0, theta));
        prop_assert!((v.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn matrix_json_round_trips(seed in any::<u64>(), n in 1usize..5) {
        let e = random_test_matrix(Profile::Contraction, n, seed).unwrap();
        let back: ComplexMatrix = serde_json::from_str(&serde_json::to_string(&e).unwrap()).unwrap();
        prop_assert_eq!(back, e);
    }

    #[test]
    fn strict_specs_factor_and_reduce(seed in any::<u64>(), n in 2usize..5) {
        let tol = Tolerances::default();
        let spec = random_block_spec(BlockVariant::Strict, n, seed).unwrap();
        let f = verify_factorization(&spec, &tol).unwrap();
        prop_assert!(f.residual <= 1e-12 * spec.a);
        prop_assert!(f.j_norm <= 1.0 + 1e-12);
        let e = conjugate(&construct_block(&spec).unwrap(), seed ^ 1);
        let c = reduce_canonical(&e, &tol).unwrap();
        prop_assert!(c.residual < 1e-8 * c.a);
        prop_assert!((c.a - spec.a).abs() < 1e-10);
        prop_assert!(orthogonality_defect(&e, &tol).unwrap() < 1e-9);
    }

    #[test]
    fn trace_zero_two_by_two_is_exceptional_after_conjugation(seed in any::<u64>()) {
        let tol = Tolerances::default();
        let e = conjugate(&random_test_matrix(Profile::TraceZero2x2, 2, seed).unwrap(), seed);
        prop_assert_eq!(check_exceptional(&e, &small(), &tol).unwrap().status, Status::ExceptionalUpToBudget);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn search_result_is_consistent(seed in any::<u64>(), n in 2usize..4) {
        let tol = Tolerances::default();
        let e = random_test_matrix(Profile::Generic, n, seed).unwrap();
        let r = extremal_search(&e, &small(), &tol).unwrap();
        let max = r.per_degree_bests.values().map(|b| b.norm).fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(r.best_norm, max);
        prop_assert!(r.best_norm >= operator_norm(&e).unwrap() * (1.0 - 1e-12));
        prop_assert!((norm_objective(&e, r.best.zeros(), &tol).unwrap() - r.best_norm).abs() <= 1e-12);
    }

    #[test]
    fn search_is_unitarily_invariant(seed in any::<u64>()) {
        let tol = Tolerances::default();
        let e = construct_block(&random_block_spec(BlockVariant::Strict, 3, seed).unwrap()).unwrap();
        let a = extremal_search(&e, &small(), &tol).unwrap().best_norm;
        let b = extremal_search(&conjugate(&e, seed), &small(), &tol).unwrap().best_norm;
        prop_assert!((a - b).abs() <= 1e-8, "{} vs {}", a, b);
    }

    #[test]
    fn larger_budgets_never_decrease_best_norm(seed in any::<u64>()) {
        let tol = Tolerances::default();
        let e = random_test_matrix(Profile::Generic, 3, seed).unwrap();
        let mut last = f64::NEG_INFINITY;
        for (grid, starts) in [(4, 1), (6, 2), (8, 2), (8, 4)] {
            let budget = SearchBudget { grid_resolution: grid, multistarts: starts, local_iters: 100, ..SearchBudget::default() };
            let v = extremal_search(&e, &budget, &tol).unwrap().best_norm;
            prop_assert!(v >= last, "grid {} starts {}: {} < {}", grid, starts, v, last);
            last = v;
        }
    }
}
