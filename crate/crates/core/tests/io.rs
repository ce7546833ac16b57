use carnot::catalog::{by_name, free_nilpotent, heisenberg, list};
use carnot::curves::{horizontal_lift, HorizontalControl};
use carnot::io::*;
use carnot::metric::HomogeneousMetric;
use carnot::ParseError;

const H1: &str = r#"{
  "name": "h1",
  "dim": 3,
  "step": 2,
  "layers": [1, 1, 2],
  "basis_names": ["X", "Y", "Z"],
  "brackets": [{"i": 1, "j": 2, "terms": [{"k": 3, "num": 1, "den": 1}]}]
}"#;

#[test]
fn hand_written_file_loads() {
    let (g, metric) = load_group(H1).unwrap();
    assert_eq!(g.dim(), 3);
    assert_eq!(g.structure_constant(0, 1, 2), carnot::qi(1));
    assert!(metric.is_none());
}

#[test]
fn every_catalog_group_round_trips() {
    for name in list() {
        let g = by_name(name).unwrap();
        let text = emit_group(&g, None).unwrap();
        let (back, _) = load_group(&text).unwrap();
        assert_eq!(back, g, "{name}");
        assert_eq!(emit_group(&back, None).unwrap(), text, "{name}");
    }
}

#[test]
fn metric_is_kept() {
    let f = free_nilpotent(2, 3).unwrap();
    let m = HomogeneousMetric::default_for(&f);
    let text = emit_group(&f, Some(m.clone())).unwrap();
    assert_eq!(load_group(&text).unwrap().1, Some(m));
    // a Koranyi gauge on a step-3 group is rejected
    let bad = emit_group(&f, Some(HomogeneousMetric::Koranyi)).unwrap();
    assert!(load_group(&bad).is_err());
}

fn problems(text: &str) -> Vec<String> {
    parse_group(text).unwrap().check().problems
}

#[test]
fn shape_problems_are_reported() {
    let swapped = H1.replace(r#""i": 1, "j": 2"#, r#""i": 2, "j": 1"#);
    assert!(problems(&swapped).iter().any(|p| p.contains("i < j")));
    let outside = H1.replace(r#""k": 3"#, r#""k": 4"#);
    assert!(problems(&outside).iter().any(|p| p.contains("out of range")));
    let zero_den = H1.replace(r#""den": 1"#, r#""den": 0"#);
    assert!(problems(&zero_den).iter().any(|p| p.contains("zero denominator")));
    let short = H1.replace(r#""layers": [1, 1, 2]"#, r#""layers": [1, 2]"#);
    assert!(problems(&short).iter().any(|p| p.contains("layers has 2 entries")));
}

#[test]
fn grading_violations_are_validation_errors() {
    // [X, Y] = X is not graded
    let bad = H1.replace(r#""k": 3"#, r#""k": 1"#);
    match load_group(&bad) {
        Err(ParseError::Validation(_)) => {}
        other => panic!("{other:?}"),
    }
}

#[test]
fn malformed_json_and_unknown_fields() {
    assert!(matches!(parse_group("{"), Err(ParseError::Json { .. })));
    let extra = H1.replace(r#""dim": 3,"#, r#""dim": 3, "color": "red","#);
    assert!(matches!(parse_group(&extra), Err(ParseError::Json { .. })));
}

#[test]
fn curve_csv_round_trip_is_exact() {
    let h = heisenberg(1);
    let lift = horizontal_lift(&h, &HorizontalControl::circle(2, 1.0), &h.zero(), 64, 1e-12).unwrap();
    let mut buf = Vec::new();
    write_curve_csv(&mut buf, &h, &lift.curve).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("t,X,Y,Z\n"));
    let back = read_curve_csv(buf.as_slice(), &h).unwrap();
    assert_eq!(back.times, lift.curve.times);
    assert_eq!(back.points, lift.curve.points);
}

#[test]
fn control_csv() {
    let h = heisenberg(1);
    let text = "t,X,Y\n0,1,0\n0.5,1,1\n1,1,2\n";
    let c = read_control_csv(text.as_bytes(), &h).unwrap();
    assert_eq!(c.eval(0.5), vec![1.0, 1.0]);
    assert!(read_control_csv("t,A,B\n0,1,0\n1,1,1\n".as_bytes(), &h).is_err());
    assert!(read_control_csv("t,X,Y\n0,1,zz\n1,1,1\n".as_bytes(), &h).is_err());
}

#[test]
fn morphism_file_by_name_and_inline() {
    let text = r#"{"domain": "h1", "codomain": "r2", "images": ["1,0", "0,1", "0,0"]}"#;
    let mf: MorphismFile = serde_json::from_str(text).unwrap();
    let l = mf.to_morphism().unwrap();
    assert!(l.is_h_homomorphism() && l.is_surjective());
    let inline = format!(r#"{{"domain": {H1}, "codomain": "r2", "images": ["1,0", "0,1", "0,0"]}}"#);
    let mf: MorphismFile = serde_json::from_str(&inline).unwrap();
    assert_eq!(mf.to_morphism().unwrap().matrix(), l.matrix());
    let back = MorphismFile::from_morphism(&l, GroupRef::Name("h1".into()), GroupRef::Name("r2".into()));
    assert_eq!(back.images, vec!["1,0", "0,1", "0,0"]);
    let bad: MorphismFile = serde_json::from_str(r#"{"domain": "h9x", "codomain": "r2", "images": []}"#).unwrap();
    assert!(bad.to_morphism().is_err());
}

#[test]
fn subalgebra_file() {
    let sf: SubalgebraFile = serde_json::from_str(r#"{"group": "h1", "vectors": ["0,1,0", "0,0,1"]}"#).unwrap();
    let (g, s) = sf.load().unwrap();
    assert_eq!(s.dim(), 2);
    assert!(s.is_ideal(&g));
    let bad: SubalgebraFile = serde_json::from_str(r#"{"group": "h1", "vectors": ["1,1,0"]}"#).unwrap();
    assert!(bad.load().is_ok());
    let not_homogeneous: SubalgebraFile = serde_json::from_str(r#"{"group": "h1", "vectors": ["1,0,1"]}"#).unwrap();
    assert!(not_homogeneous.load().is_err());
}
