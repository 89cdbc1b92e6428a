use proptest::prelude::*;
use trunclap::spectral::{eigenvalues_sorted, pk_minus, pk_plus, trace_over_subspace, KFrame, SymMatrix};

const TOL: f64 = 1e-10;

fn sym(n: usize) -> impl Strategy<Value = SymMatrix> {
    prop::collection::vec(-1.0f64..1.0, n * n).prop_map(move |e| SymMatrix::new(n, e).unwrap())
}

fn psd(n: usize) -> impl Strategy<Value = SymMatrix> {
    // MᵀM is positive semidefinite
    prop::collection::vec(-1.0f64..1.0, n * n).prop_map(move |m| {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|l| m[l * n + i] * m[l * n + j]).sum()).collect())
            .collect();
        SymMatrix::from_rows(&rows).unwrap()
    })
}

fn dim_and_k() -> impl Strategy<Value = (usize, usize)> {
    (2usize..=8).prop_flat_map(|n| (Just(n), 1..=n))
}

fn pair() -> impl Strategy<Value = (usize, usize, SymMatrix, SymMatrix)> {
    dim_and_k().prop_flat_map(|(n, k)| (Just(n), Just(k), sym(n), sym(n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn plus_is_dual_of_minus((_, k, a, _) in pair()) {
        let lhs = pk_plus(&a, k).unwrap();
        let rhs = -pk_minus(&a.scaled(-1.0), k).unwrap();
        prop_assert!((lhs - rhs).abs() <= TOL);
    }

    #[test]
    fn trace_splits((n, k, a, _) in pair()) {
        prop_assume!(k < n);
        let split = pk_minus(&a, k).unwrap() + pk_plus(&a, n - k).unwrap();
        prop_assert!((split - a.trace()).abs() <= TOL);
    }

    #[test]
    fn positively_homogeneous((_, k, a, _) in pair(), t in 0.0f64..10.0) {
        let lhs = pk_minus(&a.scaled(t), k).unwrap();
        prop_assert!((lhs - t * pk_minus(&a, k).unwrap()).abs() <= TOL * (1.0 + t));
    }

    #[test]
    fn minus_is_superadditive((_, k, a, b) in pair()) {
        let sum = pk_minus(&a.add(&b).unwrap(), k).unwrap();
        prop_assert!(sum >= pk_minus(&a, k).unwrap() + pk_minus(&b, k).unwrap() - TOL);
        let sum = pk_plus(&a.add(&b).unwrap(), k).unwrap();
        prop_assert!(sum <= pk_plus(&a, k).unwrap() + pk_plus(&b, k).unwrap() + TOL);
    }

    #[test]
    fn monotone_in_psd_order(
        (k, a, b) in dim_and_k().prop_flat_map(|(n, k)| (Just(k), sym(n), psd(n))),
    ) {
        let ab = a.add(&b).unwrap();
        prop_assert!(pk_minus(&ab, k).unwrap() >= pk_minus(&a, k).unwrap() - TOL);
        prop_assert!(pk_plus(&ab, k).unwrap() >= pk_plus(&a, k).unwrap() - TOL);
    }

    #[test]
    fn k_plane_traces_dominate(
        (n, k, a, raw) in dim_and_k().prop_flat_map(|(n, k)| {
            (Just(n), Just(k), sym(n), prop::collection::vec(prop::collection::vec(-1.0f64..1.0, n), k))
        }),
    ) {
        let pk = pk_minus(&a, k).unwrap();
        if let Ok(w) = KFrame::orthonormalize(n, &raw) {
            prop_assert!(trace_over_subspace(&a, &w).unwrap() >= pk - TOL);
        }
        let bottom = eigenvalues_sorted(&a).bottom_frame(k).unwrap();
        prop_assert!((trace_over_subspace(&a, &bottom).unwrap() - pk).abs() <= TOL);
        prop_assert!(pk <= k as f64 / n as f64 * a.trace() + TOL);
    }
}
