use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn carnot() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_carnot"));
    c.env_remove("CARNOT_CATALOG_DIR");
    c
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(args: &[&str]) -> Output {
    carnot().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = run(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

fn json(args: &[&str]) -> Value {
    serde_json::from_str(&ok(args)).unwrap()
}

#[test]
fn product_and_term() {
    assert_eq!(ok(&["algebra", "product", "h1", "1,0,0", "0,1,0"]), "1,1,1/2\n");
    assert_eq!(ok(&["algebra", "product", "h1", "-1,0,0", "0,1/3,0"]), "-1,1/3,-1/6\n");
    assert_eq!(ok(&["algebra", "term", "h1", "2", "1,0,0", "0,1,0"]), "0,0,1/2\n");
    let o = run(&["algebra", "product", "h1", "1,x,0", "0,1,0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["algebra", "product", "h1", "1,0", "0,1,0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["algebra", "term", "h1", "3", "1,0,0", "0,1,0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn decompose_and_oracle() {
    // c_3 = ([A1, [A1, A2]] - [A2, [A1, A2]]) / 12, written in L_3(A_alpha, A1 + A2)
    assert_eq!(ok(&["algebra", "decompose", "free_2_3", "3"]), "11\t1/12\n21\t-1/12\n");
    assert!(ok(&["algebra", "oracle", "h2_1", "--trials", "50"]).starts_with("OK 50"));
    assert!(ok(&["algebra", "oracle", "free_2_3", "--trials", "20", "--seed", "4"]).starts_with("OK 20"));
}

#[test]
fn group_info_and_emit() {
    let info = ok(&["group", "info", "h1"]);
    for line in ["dim: 3", "step: 2", "homogeneous dimension: 4", "stratified: true"] {
        assert!(info.contains(line), "{info}");
    }
    let a = ok(&["group", "emit", "--catalog", "h2_1"]);
    let b = ok(&["catalog", "emit", "h2_1"]);
    assert_eq!(a, b);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("h21.json");
    fs::write(&p, &a).unwrap();
    assert_eq!(ok(&["group", "emit", p.to_str().unwrap()]), a);
    assert!(ok(&["group", "validate", p.to_str().unwrap()]).contains("valid"));
    assert!(ok(&["catalog", "list"]).lines().any(|l| l.starts_with("g42\t")));
}

#[test]
fn invalid_group_files() {
    let dir = tempfile::tempdir().unwrap();
    let good = ok(&["catalog", "emit", "h1"]);
    // [X, Y] = X breaks the grading
    let bad = good.replace("\"k\": 3", "\"k\": 1");
    let p = dir.path().join("bad.json");
    fs::write(&p, bad).unwrap();
    let o = run(&["group", "validate", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("invalid"));
    let p = dir.path().join("broken.json");
    fs::write(&p, "{\n  \"name\": \"x\",\n  \"dim\": 3,,\n}").unwrap();
    let o = run(&["group", "validate", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
    assert_eq!(run(&["group", "info", "no_such_group"]).status.code(), Some(2));
}

#[test]
fn catalog_directory_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(&["catalog", "emit", "h2"]).replace("\"name\": \"h2\"", "\"name\": \"mine\"");
    fs::write(dir.path().join("mine.json"), text).unwrap();
    let o = carnot().env("CARNOT_CATALOG_DIR", dir.path()).args(["group", "info", "mine"]).output().unwrap();
    assert!(o.status.success());
    assert!(stdout(&o).contains("dim: 5"));
    let o = carnot().env("CARNOT_CATALOG_DIR", dir.path()).args(["catalog", "list"]).output().unwrap();
    assert!(stdout(&o).lines().any(|l| l.starts_with("mine\t")));
}

#[test]
fn epi_verdicts() {
    let v = json(&["subgroups", "classify-epi", config("h1_to_r2.json").to_str().unwrap()]);
    assert_eq!(v["verdict"], "surjective_not_epi");
    let v = json(&["subgroups", "classify-epi", config("g42_first_pair.json").to_str().unwrap()]);
    assert_eq!(v["verdict"], "h_epimorphism");
    assert_eq!(v["witness_basis"].as_array().unwrap().len(), 2);
    let v = json(&["subgroups", "classify-epi", config("g42_second_pair.json").to_str().unwrap()]);
    assert_eq!(v["verdict"], "surjective_not_epi");
}

#[test]
fn mono_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.json");
    fs::write(&p, r#"{"domain": "r1", "codomain": "h1", "images": ["1,0,0"]}"#).unwrap();
    let v = json(&["subgroups", "classify-mono", p.to_str().unwrap()]);
    assert_eq!(v["verdict"], "h_monomorphism");
    assert!(v["projection_images"].is_array());
}

#[test]
fn complements_and_quotients() {
    let v = json(&["subgroups", "complement", config("h1_center.json").to_str().unwrap()]);
    assert_eq!(v["verdict"], "surjective_not_epi");
    assert!(v["certificate"].is_string());
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("n1.json");
    fs::write(&p, r#"{"group": "h3", "vectors": ["1,0,0,0,0,0,0", "0,0,1,0,0,0,0", "0,1,0,0,1,0,0"]}"#).unwrap();
    let v = json(&["subgroups", "complement", "--method", "heisenberg", p.to_str().unwrap()]);
    assert_eq!(v["commutative"], true);
    assert_eq!(v["complementary"], true);
    assert_eq!(v["witness_basis"].as_array().unwrap().len(), 3);
    let p = dir.path().join("h21.json");
    fs::write(&p, r#"{"group": "h2_1", "vectors": ["0,1,0,0,0,0", "0,0,1,0,0,0"]}"#).unwrap();
    let v = json(&["subgroups", "complement", "--method", "h21", p.to_str().unwrap()]);
    assert_eq!(v["commutative"], true);
    assert_eq!(v["complementary"], true);

    let v = json(&["subgroups", "quotient", config("h1_center.json").to_str().unwrap()]);
    assert_eq!(v["abelian"], true);
    assert_eq!(v["quotient"]["dim"], 2);
    let d = &v["homogeneous_dimensions"];
    assert_eq!(d["group"].as_u64().unwrap(), d["ideal"].as_u64().unwrap() + d["quotient"].as_u64().unwrap());
}

#[test]
fn exhausted_search_exits_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("f.json");
    // free_3_3 onto R^2 killing X3: no lift span{X1 + a X3, X2 + b X3} commutes, but
    // step 3 has no exact certificate, so the search can only run out of budget
    let mut images = vec!["1,0", "0,1", "0,0"];
    images.extend(["0,0"; 11]);
    fs::write(&p, serde_json::json!({"domain": "free_3_3", "codomain": "r2", "images": images}).to_string()).unwrap();
    let o = run(&["subgroups", "classify-epi", "--budget", "0", p.to_str().unwrap()]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], "undecided");
    assert_eq!(o.status.code(), Some(4));
    // onto the first layer the complement would be forced, and it is not one
    let q = dir.path().join("g.json");
    fs::write(&q, r#"{"domain": "free_2_3", "codomain": "r2", "images": ["1,0", "0,1", "0,0", "0,0", "0,0"]}"#).unwrap();
    let v = json(&["subgroups", "classify-epi", "--budget", "0", q.to_str().unwrap()]);
    assert_eq!(v["verdict"], "surjective_not_epi");
}

#[test]
fn square_lift_encloses_unit_area() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    ok(&["experiment", "lift", config("square_lift.json").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let s: Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let dz = s["coordinate_increment"][2].as_f64().unwrap();
    assert!((dz - 1.0).abs() < 1e-8, "{dz}");
    assert_eq!(s["horizontality"]["passed"], true);
    let csv = fs::read_to_string(out.join("lift.csv")).unwrap();
    assert!(csv.starts_with("t,X,Y,Z\n"));
    let m: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 0);
    assert_eq!(m["inputs"].as_array().unwrap().len(), 1);
    assert_eq!(m["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn parabola_lift_and_pansu_order() {
    let s = json(&["experiment", "lift", config("parabola_lift.json").to_str().unwrap()]);
    let z = s["end"][2].as_f64().unwrap();
    assert!((z - 1.0 / 6.0).abs() < 1e-8, "{z}");
    let s = json(&["experiment", "pansu", config("circle_pansu.json").to_str().unwrap()]);
    assert!(s["report"]["order"].as_f64().unwrap() > 0.99);
}

#[test]
fn implicit_grid_is_deterministic_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("imp.json");
    fs::write(
        &cfg,
        r#"{"map": {"name": "planar_radius_h2"}, "base": [0, 1, 0, 1, 0], "radius": 0.2, "counts": [5, 5, 3], "restarts": 2, "restart_radius": 0.3}"#,
    )
    .unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["--threads", "1", "--seed", "5", "experiment", "implicit", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()]);
    ok(&["--threads", "3", "--seed", "5", "experiment", "implicit", cfg.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    for f in ["grid.csv", "summary.json"] {
        let (x, y) = (fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
        assert!(x == y || f == "summary.json" && String::from_utf8_lossy(&x).replace("/a/", "/b/") == String::from_utf8_lossy(&y));
    }
    let s: Value = serde_json::from_str(&fs::read_to_string(a.join("summary.json")).unwrap()).unwrap();
    assert!(s["max_residual"].as_f64().unwrap() <= 1e-8);
    assert_eq!(s["kernel"], "span{X1, X2, Z}");
}

#[test]
fn solver_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("imp.json");
    fs::write(&cfg, r#"{"map": {"name": "planar_radius_h2"}, "base": [0, 1, 0, 1, 0], "radius": 5, "counts": [5, 5, 3]}"#).unwrap();
    let o = run(&["experiment", "implicit", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("at ["));
}

#[test]
fn config_schema_violations() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"group": "h1", "control": {"kind": "square"}, "colour": 1}"#).unwrap();
    assert_eq!(run(&["experiment", "lift", cfg.to_str().unwrap()]).status.code(), Some(2));
    fs::write(&cfg, r#"{"map": {"name": "corner_h1"}, "center": [0, 0]}"#).unwrap();
    assert_eq!(run(&["experiment", "mvi", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn rank_and_estimates() {
    let s = json(&["experiment", "rank", config("legendrian_rank.json").to_str().unwrap()]);
    assert!(s["inverse_residual"].as_f64().unwrap() < 1e-8);
    assert_eq!(s["image"], "span{X1, X2}");
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("e.json");
    fs::write(&cfg, r#"{"group": "h2_1", "samples": 300}"#).unwrap();
    let a = ok(&["--seed", "9", "experiment", "verify-estimates", cfg.to_str().unwrap()]);
    let b = ok(&["--seed", "9", "experiment", "verify-estimates", cfg.to_str().unwrap()]);
    assert_eq!(a, b);
    let v: Value = serde_json::from_str(&a).unwrap();
    assert!(v["constants"].as_array().unwrap().iter().all(|c| c["finite"] == true));
}

#[test]
fn blowup_distances_decrease() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("b.json");
    fs::write(
        &cfg,
        r#"{"map": {"name": "planar_radius_h2"}, "base": [0, 1, 0, 1, 0], "scales": [0.1, 0.01, 0.001], "samples": 1000}"#,
    )
    .unwrap();
    let out = dir.path().join("o");
    ok(&["experiment", "blowup", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let s: Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(s["report"]["decreasing"], true);
    assert_eq!(s["bracket_rank"], 0);
    let rows = fs::read_to_string(out.join("blowup.csv")).unwrap();
    assert_eq!(rows.lines().count(), 4);
}

#[test]
fn manifest_for_exact_commands() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    ok(&["--manifest", a.to_str().unwrap(), "algebra", "oracle", "h1", "--trials", "10"]);
    ok(&["--manifest", b.to_str().unwrap(), "algebra", "oracle", "h1", "--trials", "10"]);
    let ma: Value = serde_json::from_str(&fs::read_to_string(&a).unwrap()).unwrap();
    let mb: Value = serde_json::from_str(&fs::read_to_string(&b).unwrap()).unwrap();
    assert_eq!(ma["outputs"], mb["outputs"]);
    assert_eq!(ma["outputs"][0]["path"], "<stdout>");
}
