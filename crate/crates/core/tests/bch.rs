use carnot::bch::*;
use carnot::catalog::{complexified_heisenberg, example_g42, free_nilpotent, heisenberg, HeisenbergMatrixModel};
use carnot::empirical::{random_rational_vector, rng};
use carnot::linalg;
use carnot::{q, qi, Rational};
use proptest::prelude::*;

#[test]
fn heisenberg_product_frozen_value() {
    // (1, 2, 3) o (4, 5, 6) = (5, 7, 9 + (1*5 - 2*4)/2)
    let h = heisenberg(1);
    let p = group_product(&h, &[qi(1), qi(2), qi(3)], &[qi(4), qi(5), qi(6)]);
    assert_eq!(p, vec![qi(5), qi(7), q(15, 2)]);
}

#[test]
fn matrix_model_agrees_with_bch() {
    for n in 1..=3 {
        let h = heisenberg(n);
        let model = HeisenbergMatrixModel::new(n);
        let mut r = rng(n as u64);
        for _ in 0..30 {
            let x = random_rational_vector(&mut r, h.dim(), 7, 5);
            let y = random_rational_vector(&mut r, h.dim(), 7, 5);
            assert_eq!(group_product(&h, &x, &y), model.product(&x, &y));
        }
    }
}

#[test]
fn bernoulli_and_k_coefficients() {
    assert_eq!(bernoulli(1), q(-1, 2));
    assert_eq!(bernoulli(2), q(1, 6));
    assert_eq!(bernoulli(4), q(-1, 30));
    assert_eq!(k_coefficient(1), q(1, 12));
    assert_eq!(k_coefficient(2), q(-1, 720));
}

#[test]
fn third_term_in_free_algebra() {
    // c_3 = ([X,[X,Y]] + [Y,[Y,X]]) / 12
    let f = free_nilpotent(2, 3).unwrap();
    let x = f.unit::<Rational>(0);
    let y = f.unit::<Rational>(1);
    let xxy = f.bracket(&x, &f.bracket(&x, &y));
    let yyx = f.bracket(&y, &f.bracket(&y, &x));
    let expect = linalg::scale(&q(1, 12), &linalg::add(&xxy, &yyx));
    assert_eq!(bch_term(&f, 3, &x, &y).unwrap(), expect);
}

#[test]
fn terms_beyond_the_step_are_errors() {
    let h = heisenberg(1);
    assert!(bch_term(&h, 3, &h.zero::<Rational>(), &h.zero::<Rational>()).is_err());
    assert!(decompose_cn(3, &h).is_err());
    assert!(try_group_product(&h, &[qi(1)], &[qi(1), qi(1), qi(1)]).is_err());
}

#[test]
fn decomposition_matches_terms_up_to_four() {
    let f = free_nilpotent(2, 4).unwrap();
    let mut r = rng(4);
    for n in 2..=4 {
        let d = decompose_cn(n, &f).unwrap();
        for _ in 0..5 {
            let a = random_rational_vector(&mut r, f.dim(), 3, 2);
            let b = random_rational_vector(&mut r, f.dim(), 3, 2);
            assert_eq!(d.evaluate(&f, &a, &b), bch_term(&f, n, &a, &b).unwrap());
        }
    }
}

#[test]
fn exp_differential_matches_oracle() {
    for g in [heisenberg(2), complexified_heisenberg(), free_nilpotent(2, 3).unwrap()] {
        let mut r = rng(7);
        for _ in 0..10 {
            let x = random_rational_vector(&mut r, g.dim(), 4, 3);
            let y = random_rational_vector(&mut r, g.dim(), 4, 3);
            let m = exp_differential(&g, &x);
            assert_eq!(linalg::mat_vec(&m, &y), exp_differential_oracle(&g, &x, &y));
        }
    }
}

#[test]
fn empirical_bounds_are_finite() {
    let h = heisenberg(1);
    let f = free_nilpotent(2, 3).unwrap();
    assert!(bilinear_bound(&h, 2, 1.0, 300, 1).is_finite());
    assert!(remainder_bound(&f, 3, 1.0, 300, 1).is_finite());
    assert!(cn_difference_bound(&f, 3, 1.0, 300, 1).is_finite());
    assert!(left_inverse_bound(&h, 1.0, 300, 1).is_finite());
}

#[test]
fn floating_product_tracks_exact_product() {
    let g = example_g42();
    let mut r = rng(9);
    for _ in 0..20 {
        let x = random_rational_vector(&mut r, g.dim(), 5, 4);
        let y = random_rational_vector(&mut r, g.dim(), 5, 4);
        let exact = g.to_float(&group_product(&g, &x, &y));
        let approx = group_product(&g, &g.to_float(&x), &g.to_float(&y));
        assert!(carnot::scalar::norm(&linalg::sub(&exact, &approx)) < 1e-12);
    }
}

fn small() -> impl Strategy<Value = Rational> {
    (-9i64..=9, 1i64..=5).prop_map(|(n, d)| q(n, d))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn associativity_in_free_step_three(
        x in proptest::collection::vec(small(), 5),
        y in proptest::collection::vec(small(), 5),
        z in proptest::collection::vec(small(), 5),
    ) {
        let f = free_nilpotent(2, 3).unwrap();
        prop_assert_eq!(
            group_product(&f, &group_product(&f, &x, &y), &z),
            group_product(&f, &x, &group_product(&f, &y, &z))
        );
    }

    #[test]
    fn inverse_and_identity(x in proptest::collection::vec(small(), 6)) {
        let g = complexified_heisenberg();
        let e = g.zero::<Rational>();
        prop_assert_eq!(group_product(&g, &x, &group_inverse(&x)), e.clone());
        prop_assert_eq!(group_product(&g, &e, &x), x.clone());
        prop_assert_eq!(left_difference(&g, &x, &x), e);
    }

    #[test]
    fn dilations_are_automorphisms(
        x in proptest::collection::vec(small(), 7),
        y in proptest::collection::vec(small(), 7),
        r in small(),
    ) {
        let g = example_g42();
        prop_assert_eq!(
            g.dilate(&group_product(&g, &x, &y), &r),
            group_product(&g, &g.dilate(&x, &r), &g.dilate(&y, &r))
        );
    }

    #[test]
    fn terms_are_homogeneous(
        x in proptest::collection::vec(small(), 5),
        y in proptest::collection::vec(small(), 5),
        lam in small(),
    ) {
        let f = free_nilpotent(2, 3).unwrap();
        let (lx, ly) = (linalg::scale(&lam, &x), linalg::scale(&lam, &y));
        let mut pow = qi(1);
        for n in 1..=3 {
            pow *= lam.clone();
            prop_assert_eq!(bch_term(&f, n, &lx, &ly).unwrap(), linalg::scale(&pow, &bch_term(&f, n, &x, &y).unwrap()));
        }
    }
}
