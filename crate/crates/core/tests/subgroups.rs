use carnot::catalog::{abelian, complexified_heisenberg, example_g42, free_nilpotent, heisenberg};
use carnot::empirical::{random_rational, rng};
use carnot::linalg::{self, Span};
use carnot::subgroups::*;
use carnot::{qi, GradedAlgebra, Rational};
use num_traits::Zero;
use proptest::prelude::*;

fn layer1_random(alg: &GradedAlgebra, count: usize, seed: u64) -> Vec<Vec<Rational>> {
    let mut r = rng(seed);
    let m = alg.layer_dim(1);
    (0..count)
        .map(|_| {
            let c: Vec<Rational> = (0..m).map(|_| random_rational(&mut r, 3, 2)).collect();
            alg.embed_layer(&c, 1)
        })
        .collect()
}

/// Random kernel `n_1` of codimension `k` in the first layer.
fn random_kernel(alg: &GradedAlgebra, k: usize, seed: u64) -> Span {
    let m = alg.layer_dim(1);
    let mut s = seed;
    loop {
        let vs = layer1_random(alg, m - k, s);
        let sp = Span::new(alg.dim(), &vs);
        if sp.dim() == m - k {
            return sp;
        }
        s += 1000;
    }
}

#[test]
fn heisenberg_complement_random_kernels() {
    let mut fallbacks = 0;
    for n in 1..=4 {
        let h = heisenberg(n);
        for t in 0..50u64 {
            let k = 1 + (t as usize % n);
            let n1 = random_kernel(&h, k, 100 * n as u64 + t);
            let (s, path) = heisenberg_complement_traced(&h, &n1).unwrap();
            if path == ComplementPath::IsotropicSearch {
                fallbacks += 1;
            }
            assert!(s.is_horizontal());
            assert!(s.is_commutative(&h));
            assert_eq!(s.dim(), k);
            assert_eq!(s.layer(1).sum(&n1).dim(), 2 * n);
        }
    }
    eprintln!("isotropic search used {fallbacks} times out of 200");
}

#[test]
fn heisenberg_complement_rejects_bad_codimension() {
    let h = heisenberg(2);
    // codimension 3 > n
    let n1 = Span::new(5, &[h.unit(0)]);
    assert!(heisenberg_complement(&h, &n1).is_err());
    let n1 = Span::new(5, &[h.unit(4), h.unit(0), h.unit(1)]);
    assert!(heisenberg_complement(&h, &n1).is_err());
}

#[test]
fn h21_noncommutative_random() {
    let g = complexified_heisenberg();
    let z = HomogeneousSubalgebra::tail(&g, 2);
    let mut done = 0;
    let mut seed = 0;
    while done < 20 {
        seed += 1;
        let vs = layer1_random(&g, 2, seed);
        if linalg::rank(&vs) < 2 || linalg::is_zero_vec(&g.bracket(&vs[0], &vs[1])) {
            continue;
        }
        let mut all = z.basis();
        all.extend(vs);
        let n = HomogeneousSubalgebra::layered_decomposition(&g, &all).unwrap();
        assert!(n.is_ideal(&g));
        let h = h21_complement(&g, &n).unwrap();
        assert!(h.is_horizontal() && h.is_commutative(&g));
        assert!(is_complementary(&g, &h, &n));
        done += 1;
    }
}

#[test]
fn h21_commutative_case_random() {
    // n_1 = span{X, J1 J2 X} through the basis R_0 = E1, R_3 = E4
    let g = complexified_heisenberg();
    let mut r = rng(9);
    for _ in 0..20 {
        let a = random_rational(&mut r, 4, 3);
        let b = random_rational(&mut r, 4, 3);
        if a.is_zero() && b.is_zero() {
            continue;
        }
        let x = g.embed_layer(&[a.clone(), qi(0), qi(0), b.clone()], 1);
        let y = g.embed_layer(&[-b, qi(0), qi(0), a], 1);
        assert!(linalg::is_zero_vec(&g.bracket(&x, &y)));
        let mut all = HomogeneousSubalgebra::tail(&g, 2).basis();
        all.extend([x, y]);
        let n = HomogeneousSubalgebra::layered_decomposition(&g, &all).unwrap();
        let h = h21_complement(&g, &n).unwrap();
        assert!(h.is_commutative(&g) && is_complementary(&g, &h, &n));
    }
}

#[test]
fn epimorphisms_onto_euclidean_spaces_of_heisenberg() {
    for n in 1..=3 {
        let h = heisenberg(n);
        for k in 1..=n {
            let r = abelian(k);
            for seed in 0..5u64 {
                let rows = layer1_random(&h, k, seed * 31 + k as u64);
                let mut m = linalg::zeros::<Rational>(k, h.dim());
                for (i, row) in rows.iter().enumerate() {
                    m[i] = row.clone();
                }
                let l = GradedMorphism::new(h.clone(), r.clone(), m).unwrap();
                if !l.is_surjective() {
                    continue;
                }
                let c = classify_epimorphism(&l, &SearchOptions::default()).unwrap();
                assert_eq!(c.verdict, EpiVerdict::HEpimorphism);
                let w = c.witness.unwrap();
                let ker = l.kernel_subalgebra().unwrap();
                assert!(is_complementary(&h, &ker, &w));
                assert_eq!(w.homogeneous_dimension() + ker.homogeneous_dimension(), h.homogeneous_dimension());
                let s = right_inverse(&l, &w).unwrap();
                assert!(s.is_h_homomorphism());
                let id = l.compose(&s).unwrap();
                assert_eq!(id.matrix(), &linalg::identity::<Rational>(k));
            }
        }
        // beyond n the kernel cannot be complemented
        let r = abelian(n + 1);
        let idx: Vec<usize> = (0..=n).collect();
        let l = GradedMorphism::coordinate_projection(h.clone(), r, &idx).unwrap();
        let c = classify_epimorphism(&l, &SearchOptions::default()).unwrap();
        assert_eq!(c.verdict, EpiVerdict::SurjectiveNotEpi, "n = {n}");
    }
}

#[test]
fn center_of_h1_has_no_complement() {
    let h = heisenberg(1);
    let c = complement_of_ideal(&h, &HomogeneousSubalgebra::tail(&h, 2), &SearchOptions::default()).unwrap();
    assert_eq!(c.verdict, EpiVerdict::SurjectiveNotEpi);
    assert!(c.certificate.as_deref().unwrap().contains("unit ideal"));
    let j = c.to_json();
    assert_eq!(j["verdict"], "surjective_not_epi");
}

#[test]
fn g42_witness_restricts_to_isomorphism() {
    let g = example_g42();
    let l = GradedMorphism::coordinate_projection(g.clone(), abelian(2), &[0, 1]).unwrap();
    let c = classify_epimorphism(&l, &SearchOptions::default()).unwrap();
    let w = c.witness.unwrap();
    assert!(l.restricts_to_isomorphism(&w));
    let (qa, pi) = quotient(&g, &l.kernel_subalgebra().unwrap()).unwrap();
    assert!(qa.is_abelian());
    // quotient o section is the identity
    let s = right_inverse(&pi, &w).unwrap();
    assert_eq!(pi.compose(&s).unwrap().matrix(), &linalg::identity::<Rational>(2));
}

#[test]
fn non_homomorphisms_are_rejected() {
    let h = heisenberg(1);
    let mut m = linalg::zeros::<Rational>(3, 3);
    m[0][2] = qi(1);
    m[1][1] = qi(1);
    m[2][0] = qi(1);
    let l = GradedMorphism::new(h.clone(), h.clone(), m).unwrap();
    let r = check_h_homomorphism(&l);
    assert!(!r.is_layer_preserving);
    assert!(classify_epimorphism(&l, &SearchOptions::default()).is_err());
    let zero = GradedMorphism::new(h.clone(), abelian(2), linalg::zeros(2, 3)).unwrap();
    assert!(zero.is_h_homomorphism());
    let c = classify_epimorphism(&zero, &SearchOptions::default()).unwrap();
    assert_eq!(c.verdict, EpiVerdict::NotSurjective);
}

#[test]
fn heisenberg_quotients_are_euclidean() {
    for n in 1..=3 {
        let h = heisenberg(n);
        for k in 1..=2 * n {
            let u = random_kernel(&h, k, 7 * n as u64 + k as u64);
            let mut vs = u.basis().clone();
            vs.extend(HomogeneousSubalgebra::tail(&h, 2).basis());
            let ideal = HomogeneousSubalgebra::layered_decomposition(&h, &vs).unwrap();
            let (qa, pi) = quotient(&h, &ideal).unwrap();
            assert_eq!(qa.dim(), k);
            assert!(qa.is_abelian());
            assert!(qa.layers().iter().all(|&l| l == 1));
            assert!(pi.is_h_homomorphism() && pi.is_surjective());
        }
    }
}

#[test]
fn anyfact_pairs_in_heisenberg() {
    for n in 1..=3 {
        let h = heisenberg(n);
        let pairs = search_complementary_pairs(&h, 40, 20_000, n as u64);
        assert!(pairs.len() >= 30, "n = {n}: {}", pairs.len());
        for (a, b) in pairs {
            let pa = horizontal_vertical_classify(&h, &a).unwrap();
            let pb = horizontal_vertical_classify(&h, &b).unwrap();
            let mut ps = [pa, pb];
            ps.sort_by_key(|p| *p as u8);
            assert_eq!(ps, [LayerPosition::Horizontal, LayerPosition::Vertical]);
            assert_eq!(a.homogeneous_dimension() + b.homogeneous_dimension(), h.homogeneous_dimension());
        }
    }
}

#[test]
fn normal_pairs_in_complexified_heisenberg() {
    let g = complexified_heisenberg();
    let pairs = search_complementary_pairs(&g, 400, 200_000, 5);
    let mut normal = 0;
    for (a, b) in &pairs {
        assert_eq!(a.homogeneous_dimension() + b.homogeneous_dimension(), g.homogeneous_dimension());
        for (n, h) in [(a, b), (b, a)] {
            if n.is_ideal(&g) {
                normal += 1;
                assert!(n.contains_layer(&g, 2));
                assert!(n.dim() == 4 || n.dim() == 5);
                assert!(h.is_horizontal() && h.is_commutative(&g));
            }
        }
    }
    assert!(normal >= 100, "{normal} normal pairs out of {}", pairs.len());
}

#[test]
fn monomorphism_into_first_layer() {
    for n in 1..=3 {
        let h = heisenberg(n);
        let k = n;
        // Lagrangian image span{X_1..X_n}
        let imgs: Vec<Vec<Rational>> = (0..k).map(|i| h.unit(2 * i)).collect();
        let t = GradedMorphism::from_images(abelian(k), h.clone(), &imgs).unwrap();
        let c = classify_monomorphism(&t, &SearchOptions::default()).unwrap();
        assert_eq!(c.verdict, MonoVerdict::HMonomorphism);
        let nn = c.complement.unwrap();
        assert!(nn.is_ideal(&h));
        assert!(nn.contains_layer(&h, 2));
        let p = c.projection.unwrap();
        assert!(p.is_h_homomorphism());
        assert_eq!(p.compose(&t).unwrap().matrix(), &linalg::identity::<Rational>(k));
    }
}

#[test]
fn product_set_in_h2() {
    // a = span{X1, X2, Z + Y1}, b = span{Y1, Y2}: 2 X1 + Z is not a product
    let h = heisenberg(2);
    let a = vec![h.unit(0), h.unit(2), linalg::add(&h.unit(4), &h.unit(1))];
    let b = vec![h.unit(1), h.unit(3)];
    assert!(HomogeneousSubalgebra::layered_decomposition(&h, &a).is_err());
    let out = product_set_membership(&h, &a, &b, &[2.0, 0.0, 0.0, 0.0, 1.0], 16, 1);
    // the product set is not closed: residuals can shrink only along diverging coefficients
    assert!(!out.member);
    assert!(out.residual > 1e-8);
}

fn small_rational() -> impl Strategy<Value = Rational> {
    (-6i64..=6, 1i64..=4).prop_map(|(n, d)| carnot::q(n, d))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn complementary_lines_of_h1(lam in small_rational()) {
        let h = heisenberg(1);
        let a = HomogeneousSubalgebra::layered_decomposition(&h, &[vec![qi(1), lam, qi(0)]]).unwrap();
        let s = HomogeneousSubalgebra::layered_decomposition(&h, &[h.unit(1), h.unit(2)]).unwrap();
        prop_assert!(is_complementary(&h, &a, &s));
        prop_assert_eq!(horizontal_vertical_classify(&h, &a).unwrap(), LayerPosition::Horizontal);
        prop_assert_eq!(horizontal_vertical_classify(&h, &s).unwrap(), LayerPosition::Vertical);
    }

    #[test]
    fn split_is_exact(xs in proptest::collection::vec(small_rational(), 5)) {
        let h = heisenberg(2);
        let a = HomogeneousSubalgebra::layered_decomposition(&h, &[h.unit(0), h.unit(2)]).unwrap();
        let b = HomogeneousSubalgebra::layered_decomposition(&h, &[h.unit(1), h.unit(3), h.unit(4)]).unwrap();
        let (p, q) = split(&h, &a, &b, &xs).unwrap();
        prop_assert_eq!(carnot::bch::group_product(&h, &p, &q), xs);
    }

    #[test]
    fn quotient_projection_commutes_with_dilations(xs in proptest::collection::vec(small_rational(), 7), r in small_rational()) {
        let g = example_g42();
        let ideal = HomogeneousSubalgebra::tail(&g, 2);
        let (qa, pi) = quotient(&g, &ideal).unwrap();
        prop_assert_eq!(pi.apply(&g.dilate(&xs, &r)), qa.dilate(&pi.apply(&xs), &r));
    }
}

#[test]
fn forced_first_layer_decides_step_three() {
    // free_2_3 onto R^2: the only candidate complement is generated by V_1, which is everything
    let f = free_nilpotent(2, 3).unwrap();
    let l = GradedMorphism::coordinate_projection(f, abelian(2), &[0, 1]).unwrap();
    let c = classify_epimorphism(&l, &SearchOptions { budget: 0, ..SearchOptions::default() }).unwrap();
    assert_eq!(c.verdict, EpiVerdict::SurjectiveNotEpi);
    assert_eq!(c.method, "forced_first_layer");
}
