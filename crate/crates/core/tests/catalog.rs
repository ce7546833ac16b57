use carnot::catalog::*;
use carnot::graded_algebra::StructureTable;
use carnot::linalg;
use carnot::subgroups::{check_h_homomorphism, HomogeneousSubalgebra};
use carnot::{q, qi, GradedAlgebra, Rational};
use proptest::prelude::*;

#[test]
fn homogeneous_dimensions() {
    assert_eq!(heisenberg(1).homogeneous_dimension(), 4);
    assert_eq!(heisenberg(2).homogeneous_dimension(), 6);
    assert_eq!(complexified_heisenberg().homogeneous_dimension(), 8);
    assert_eq!(example_g42().homogeneous_dimension(), 10);
    assert_eq!(free_nilpotent(2, 3).unwrap().homogeneous_dimension(), 2 + 2 + 6);
    assert_eq!(direct_product(&heisenberg(1), &heisenberg(1)).homogeneous_dimension(), 8);
}

#[test]
fn free_algebra_layer_dimensions() {
    // Witt formula: 2, 1, 2, 3 for two generators; 3, 3, 8 for three
    assert_eq!(free_nilpotent(2, 4).unwrap().layers().iter().filter(|&&l| l == 4).count(), 3);
    let f = free_nilpotent(3, 3).unwrap();
    assert_eq!((f.layer_dim(1), f.layer_dim(2), f.layer_dim(3)), (3, 3, 8));
    assert!(f.validate().is_valid() && f.is_stratified());
}

#[test]
fn every_catalog_entry_validates() {
    for name in list() {
        let g = by_name(name).unwrap();
        assert!(g.validate().is_valid(), "{name}");
        assert!(g.is_stratified(), "{name}");
    }
    assert!(by_name("h0").is_none());
    assert!(by_name("free_2").is_none());
    assert!(by_name("nonsense").is_none());
}

#[test]
fn h_type_detection() {
    assert!(is_h_type(&heisenberg(1)));
    assert!(is_h_type(&heisenberg(3)));
    assert!(is_h_type(&complexified_heisenberg()));
    assert!(!is_h_type(&example_g42()));
    assert!(!is_h_type(&abelian(3)));
    let data = j_data_of(&complexified_heisenberg());
    assert_eq!(h_type_from_j(&data).unwrap(), complexified_heisenberg());
}

#[test]
fn non_h_type_data_is_rejected() {
    let mut d = heisenberg_data(1);
    d.j[0] = linalg::scale_matrix(&qi(2), &d.j[0]);
    assert!(h_type_from_j(&d).is_err());
    let mut d = complexified_heisenberg_data();
    d.j[1] = d.j[0].clone();
    assert!(h_type_from_j(&d).is_err());
}

#[test]
fn complementary_pair_without_normal_member() {
    // span{R0, R3, Z1} and span{R1, R2, Z2}
    let g = complexified_heisenberg();
    let a = HomogeneousSubalgebra::layered_decomposition(&g, &[g.unit(0), g.unit(3), g.unit(4)]).unwrap();
    let b = HomogeneousSubalgebra::layered_decomposition(&g, &[g.unit(1), g.unit(2), g.unit(5)]).unwrap();
    assert!(carnot::subgroups::is_complementary(&g, &a, &b));
    assert!(!a.is_ideal(&g) && !b.is_ideal(&g));
}

#[test]
fn free_projection_is_a_surjective_h_homomorphism() {
    for (p, r, step) in [(2, 2, 2), (2, 3, 2), (2, 3, 3), (3, 3, 2)] {
        let l = free_projection(p, r, step, &heisenberg(1)).unwrap();
        let rep = check_h_homomorphism(&l);
        assert!(rep.is_lie_hom && rep.is_layer_preserving, "({p}, {r}, {step})");
        assert!(l.is_surjective());
        assert_eq!(l.domain().dim(), free_nilpotent(r, step).unwrap().dim() + 3);
    }
    assert!(free_projection(3, 2, 2, &abelian(1)).is_err());
}

#[test]
fn structure_table_rejects_bad_gradings() {
    // [X, Y] = X breaks the grading
    let mut t = StructureTable::new(3);
    t.set_bracket(0, 1, 0, qi(1));
    let bad = GradedAlgebra::new("bad", vec!["X".into(), "Y".into(), "Z".into()], vec![1, 1, 2], &t);
    assert!(bad.is_err());
    // [X1, X2] = Y, [X3, Y] = W and nothing else: the Jacobi sum on X1, X2, X3 is W
    let mut t = StructureTable::new(5);
    t.set_bracket(0, 1, 3, qi(1));
    t.set_bracket(2, 3, 4, qi(1));
    let names: Vec<String> = ["X1", "X2", "X3", "Y", "W"].iter().map(|s| s.to_string()).collect();
    let err = GradedAlgebra::new("no_jacobi", names.clone(), vec![1, 1, 1, 2, 3], &t).unwrap_err();
    assert!(err.to_string().to_lowercase().contains("jacobi"), "{err}");
    // without [X3, Y] the table is a graded algebra, though W is not generated by the first layer
    let mut t = StructureTable::new(5);
    t.set_bracket(0, 1, 3, qi(1));
    let g = GradedAlgebra::new("graded", names, vec![1, 1, 1, 2, 3], &t).unwrap();
    assert!(!g.is_stratified());
}

#[test]
fn matrix_model_round_trip() {
    let m = HeisenbergMatrixModel::new(2);
    let x = vec![qi(1), q(-1, 2), qi(3), qi(0), q(5, 7)];
    assert_eq!(m.from_matrix(&m.to_matrix(&x)), x);
    assert_eq!(m.log(&m.exp(&m.to_matrix(&x))), m.to_matrix(&x));
}

fn small() -> impl Strategy<Value = Rational> {
    (-6i64..=6, 1i64..=4).prop_map(|(n, d)| q(n, d))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn jacobi_identity(
        x in proptest::collection::vec(small(), 6),
        y in proptest::collection::vec(small(), 6),
        z in proptest::collection::vec(small(), 6),
    ) {
        let g = complexified_heisenberg();
        let a = g.bracket(&x, &g.bracket(&y, &z));
        let b = g.bracket(&y, &g.bracket(&z, &x));
        let c = g.bracket(&z, &g.bracket(&x, &y));
        prop_assert!(linalg::is_zero_vec(&linalg::add(&linalg::add(&a, &b), &c)));
    }

    #[test]
    fn product_layers_are_independent(
        x in proptest::collection::vec(small(), 7),
        y in proptest::collection::vec(small(), 6),
    ) {
        let g = direct_product(&example_g42(), &complexified_heisenberg());
        let mut v = x.clone();
        v.extend(vec![qi(0); 6]);
        let mut w = vec![qi(0); 7];
        w.extend(y);
        prop_assert!(linalg::is_zero_vec(&g.bracket(&v, &w)));
    }
}
