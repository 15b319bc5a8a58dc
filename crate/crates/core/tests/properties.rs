use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;

use obtuse::chain::{local_cf, operator_cf, ChainOperator};
use obtuse::limit::{limit_cf, LimitSpec};
use obtuse::obtuse::DEFAULT_TOL;
use obtuse::tensor::{reconstruct, reconstruct_from_jumps, structure_residual};
use obtuse::{
    classify, diagonalize, exact_discrete_cf, mult_op, site_op, system_of, tensor_of, ChainSpace,
    ObtuseVariable, WalkScenario,
};

fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.02f64..1.0, n + 1).prop_map(|raw| {
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / total).collect()
    })
}

fn variable() -> impl Strategy<Value = ObtuseVariable> {
    (1usize..=4, any::<u64>())
        .prop_flat_map(|(n, seed)| (weights(n), Just(seed)))
        .prop_map(|(w, seed)| ObtuseVariable::from_probabilities(&w, Some(seed)).unwrap())
}

fn alpha_for(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weights_always_give_obtuse_variables(x in variable()) {
        let report = x.validate(DEFAULT_TOL);
        prop_assert!(report.passes(), "{report:?}");
        prop_assert!(x.unitary_embedding().orthogonality_defect() < 1e-10);
    }

    #[test]
    fn tensors_of_variables_are_sesqui_symmetric(x in variable()) {
        let t = tensor_of(&x);
        let class = classify(&t, 1e-9);
        prop_assert!(class.sesqui_symmetric, "{class:?}");
        prop_assert!(structure_residual(&x, &t) < 1e-9);
    }

    #[test]
    fn system_of_inverts_tensor_of(x in variable()) {
        let t = tensor_of(&x);
        let back = system_of(&t, DEFAULT_TOL).unwrap();
        prop_assert!(tensor_of(&back).max_abs_diff(&t) < 1e-8);
        let mut a: Vec<f64> = x.probs().to_vec();
        let mut b: Vec<f64> = back.probs().to_vec();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        for (p, q) in a.iter().zip(&b) {
            prop_assert!((p - q).abs() < 1e-8);
        }
    }

    #[test]
    fn walk_cf_is_a_characteristic_function(
        (x, alpha) in variable().prop_flat_map(|x| { let n = x.dim(); (Just(x), alpha_for(n)) }),
        h in 1e-3f64..0.5,
        t in 0.0f64..3.0,
    ) {
        let scenario = WalkScenario::new(x, h, t).unwrap();
        let z = exact_discrete_cf(&scenario, &alpha).unwrap();
        prop_assert!(z.norm() <= 1.0 + 1e-12);
        let minus: Vec<f64> = alpha.iter().map(|a| -a).collect();
        let w = exact_discrete_cf(&scenario, &minus).unwrap();
        prop_assert!((w - z.conj()).norm() < 1e-12);
        let zero = vec![0.0; alpha.len()];
        prop_assert!((exact_discrete_cf(&scenario, &zero).unwrap() - 1.0).norm() < 1e-12);
    }

    #[test]
    fn operator_cf_matches_walk_cf(
        (x, alpha) in variable().prop_flat_map(|x| { let n = x.dim(); (Just(x), alpha_for(n)) }),
        h in 1e-3f64..0.5,
    ) {
        let t = tensor_of(&x);
        let scenario = WalkScenario::new(x, h, 1.0).unwrap();
        let walk = exact_discrete_cf(&scenario, &alpha).unwrap();
        prop_assert!((operator_cf(&t, &alpha, h, 1.0).unwrap() - walk).norm() < 1e-10);
        prop_assert!(local_cf(&t, &alpha, h).unwrap().norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn limit_cf_is_a_semigroup(
        lengths in prop::collection::vec(0.3f64..3.0, 0..=2),
        alpha in alpha_for(3),
        s in 0.0f64..2.0,
        t in 0.0f64..2.0,
    ) {
        let dirs = [
            DVector::from_vec(vec![1.0, 1.0, 0.0]),
            DVector::from_vec(vec![1.0, -1.0, 1.0]),
        ];
        let jumps: Vec<DVector<f64>> = lengths.iter().zip(&dirs).map(|(l, d)| d.normalize() * *l).collect();
        let spec = LimitSpec::from_jumps(3, jumps, 1e-12).unwrap();
        let a = limit_cf(&spec, &alpha, s).unwrap();
        let b = limit_cf(&spec, &alpha, t).unwrap();
        let ab = limit_cf(&spec, &alpha, s + t).unwrap();
        prop_assert!((a * b - ab).norm() < 1e-12);
        prop_assert!(ab.norm() <= 1.0 + 1e-12);
        prop_assert_eq!(limit_cf(&spec, &[0.0; 3], t).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn multiplication_operators_are_hermitian_and_commute(x in variable(), site in 0usize..2) {
        let space = ChainSpace::new(x.dim(), 2).unwrap();
        let ops = mult_op(&tensor_of(&x), site, space).unwrap();
        let other = mult_op(&tensor_of(&x), 1 - site, space).unwrap();
        for a in &ops {
            prop_assert!(a.is_hermitian());
            for b in ops.iter().chain(&other) {
                prop_assert!(a.commutator(b).max_abs() < 1e-9);
            }
        }
    }

    #[test]
    fn site_operators_compose_like_matrix_units(
        i in 0usize..3, j in 0usize..3, k in 0usize..3, l in 0usize..3, site in 0usize..3,
    ) {
        let space = ChainSpace::new(2, 3).unwrap();
        let a = site_op(i, j, site, space).unwrap();
        let b = site_op(k, l, site, space).unwrap();
        // a^k_l a^i_j = δ_jk a^i_l
        let prod = b.compose(&a);
        let want = if j == k { site_op(i, l, site, space).unwrap() } else { ChainOperator::zero(space) };
        prop_assert_eq!(prod.max_abs_diff(&want), 0.0);
        prop_assert_eq!(a.adjoint().max_abs_diff(&site_op(j, i, site, space).unwrap()), 0.0);
        let far = site_op(k, l, (site + 1) % 3, space).unwrap();
        prop_assert_eq!(a.commutator(&far).max_abs(), 0.0);
    }

    #[test]
    fn diagonalize_inverts_reconstruct(
        lengths in prop::collection::vec(prop_oneof![-3.0f64..-0.3, 0.3f64..3.0], 0..=3),
        seed in any::<u64>(),
    ) {
        let basis = [
            DVector::from_vec(vec![1.0, 2.0, 2.0]) / 3.0,
            DVector::from_vec(vec![2.0, 1.0, -2.0]) / 3.0,
            DVector::from_vec(vec![2.0, -2.0, 1.0]) / 3.0,
        ];
        let jumps: Vec<DVector<f64>> = lengths.iter().zip(&basis).map(|(l, e)| e * *l).collect();
        let a = reconstruct_from_jumps(3, &jumps);
        let family = diagonalize(&a, seed, 1e-10).unwrap();
        prop_assert!(reconstruct(&family).max_abs_diff(&a) < 1e-10);
        prop_assert_eq!(family.jump_set.len(), jumps.len());
        prop_assert!(family.orthonormality_defect() < 1e-10);
    }

    #[test]
    fn words_encode_and_decode(n in 1usize..4, sites in 1usize..5, raw in any::<u64>()) {
        let space = ChainSpace::new(n, sites).unwrap();
        let index = (raw % space.dim() as u64) as usize;
        prop_assert_eq!(space.encode(&space.decode(index)).unwrap(), index);
    }

    #[test]
    fn operator_dumps_round_trip(x in variable()) {
        let space = ChainSpace::new(x.dim(), 2).unwrap();
        for op in mult_op(&tensor_of(&x), 1, space).unwrap() {
            let parsed = ChainOperator::parse_dump(&op.to_dump_string()).unwrap();
            prop_assert_eq!(parsed.max_abs_diff(&op), 0.0);
        }
    }
}
