use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn simtri(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simtri")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn real(rows: &[&[f64]]) -> Value {
    Value::Array(
        rows.iter()
            .map(|r| Value::Array(r.iter().map(|x| json!([x, 0.0])).collect()))
            .collect(),
    )
}

fn write_family(dir: &TempDir, file: &str, mats: &[(&str, Value)]) -> PathBuf {
    let dim = mats[0].1.as_array().unwrap().len();
    let matrices: Vec<Value> = mats.iter().map(|(n, e)| json!({"name": n, "entries": e})).collect();
    let path = dir.path().join(file);
    std::fs::write(&path, serde_json::to_string(&json!({"dim": dim, "matrices": matrices})).unwrap()).unwrap();
    path
}

fn golden_pair(dir: &TempDir) -> PathBuf {
    write_family(
        dir,
        "golden.json",
        &[("A", real(&[&[1.0, 0.0], &[0.0, 0.0]])), ("B", real(&[&[0.0, 0.0], &[1.0, 0.0]]))],
    )
}

fn run_json(args: &[&str]) -> Value {
    let o = simtri(args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn check_reports_left_annihilation_on_the_example_pair() {
    let dir = TempDir::new().unwrap();
    let f = golden_pair(&dir);
    let r = run_json(&["check", p(&f)]);
    let pair = &r["conditions"]["pair"];
    assert!(pair["residual_norms"]["a_times_commutator"].as_f64().unwrap() <= 1e-12);
    assert_eq!(pair["shemesh_left_right"], true);
    assert_eq!(r["conditions"]["l_nilpotent_length"], Value::Null);
}

#[test]
fn check_exits_zero_when_predicates_fail() {
    let dir = TempDir::new().unwrap();
    let f = write_family(
        &dir,
        "f.json",
        &[("A", real(&[&[0.0, 1.0], &[0.0, 0.0]])), ("B", real(&[&[0.0, 0.0], &[1.0, 0.0]]))],
    );
    let r = run_json(&["check", p(&f)]);
    assert_eq!(r["conditions"]["pair"]["shemesh_left_right"], false);
}

#[test]
fn commuting_diagonals_have_length_one() {
    let dir = TempDir::new().unwrap();
    let f = write_family(
        &dir,
        "d.json",
        &[("A", real(&[&[1.0, 0.0], &[0.0, 2.0]])), ("B", real(&[&[3.0, 0.0], &[0.0, -1.0]]))],
    );
    let r = run_json(&["check", p(&f)]);
    assert_eq!(r["conditions"]["l_nilpotent_length"], 1);
    assert_eq!(r["conditions"]["commuting"], true);
}

#[test]
fn malformed_pair_names_the_matrix() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{"dim": 2, "matrices": [
            {"name": "A", "entries": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]]},
            {"name": "Bad", "entries": [[[0, 0], [0, 0]], [[1], [0, 0]]]}]}"#,
    )
    .unwrap();
    let o = simtri(&["check", p(&path)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("matrix `Bad`, row 1, column 0"), "{}", stderr(&o));
}

#[test]
fn syntax_error_reports_a_line() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"dim\": 2,\n\"matrices\": [,]}").unwrap();
    let o = simtri(&["check", p(&path)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn missing_file_and_bad_tolerance_are_input_errors() {
    assert_eq!(code(&simtri(&["check", "/nonexistent/family.json"])), 2);
    let dir = TempDir::new().unwrap();
    let f = golden_pair(&dir);
    assert_eq!(code(&simtri(&["check", p(&f), "--zero-tol", "-1"])), 2);
    assert_eq!(code(&simtri(&["check", p(&f), "--zero-tol", "abc"])), 2);
}

#[test]
fn shemesh_mode_certifies_the_example_pair() {
    let dir = TempDir::new().unwrap();
    let f = golden_pair(&dir);
    let r = run_json(&["triangularize", p(&f), "--mode", "shemesh"]);
    assert_eq!(r["result"]["mode"], "shemesh");
    let cert = &r["result"]["objects"][0];
    let dims: Vec<usize> = cert["chain"]["subspaces"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v["basis"]["columns"].as_array().unwrap().len())
        .collect();
    assert_eq!(dims, vec![1]);
    assert_eq!(r["verification"][0]["overall"], true);
}

#[test]
fn single_matrix_takes_the_commuting_route() {
    let dir = TempDir::new().unwrap();
    let f = write_family(&dir, "one.json", &[("A", real(&[&[2.0, 1.0], &[1.0, 2.0]]))]);
    let r = run_json(&["triangularize", p(&f)]);
    assert_eq!(r["result"]["mode"], "commuting");
    assert!(r["verification"].as_array().unwrap().iter().all(|v| v["overall"] == true));
}

#[test]
fn no_predicate_lists_every_residual() {
    let dir = TempDir::new().unwrap();
    let g = dir.path().join("g.json");
    let o = simtri(&["generate", "--kind", "shemesh_lr", "--dim", "4", "--seed", "3", "--violate", "--out", p(&g)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = simtri(&["triangularize", p(&g)]);
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    for needle in ["L-nilpotency", "A[A,B] = [A,B]B = 0", "A[A,B] = B[A,B] = 0", "normal pair"] {
        assert!(err.contains(needle), "{needle} missing from {err}");
    }
}

#[test]
fn explicit_mode_reports_the_failing_predicate() {
    let dir = TempDir::new().unwrap();
    let f = write_family(
        &dir,
        "f.json",
        &[("A", real(&[&[0.0, 1.0], &[0.0, 0.0]])), ("B", real(&[&[0.0, 0.0], &[1.0, 0.0]]))],
    );
    let o = simtri(&["triangularize", p(&f), "--mode", "l_nilpotent"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("not L-nilpotent"), "{}", stderr(&o));
}

#[test]
fn algebra_of_upper_triangular_generators() {
    let dir = TempDir::new().unwrap();
    let f = write_family(
        &dir,
        "u.json",
        &[
            ("E11", real(&[&[1.0, 0.0], &[0.0, 0.0]])),
            ("E12", real(&[&[0.0, 1.0], &[0.0, 0.0]])),
            ("E22", real(&[&[0.0, 0.0], &[0.0, 1.0]])),
        ],
    );
    let r = run_json(&["algebra", p(&f)]);
    let s = &r["result"]["structure"];
    // Hand computation: A is the 3-dimensional upper-triangular algebra,
    // J(A) = span{E12}, J² = 0, so A/J has dimension 2.
    assert_eq!(s["dim_algebra"], 3);
    assert_eq!(r["result"]["radical_dim"], 1);
    assert_eq!(s["quotient_dim"], 2);
    assert_eq!(s["radical_exponent"], 2);
    assert_eq!(r["result"]["quotient_commutativity"]["commutative"], true);
}

#[test]
fn algebra_of_the_identity() {
    let dir = TempDir::new().unwrap();
    let f = write_family(&dir, "i.json", &[("I", real(&[&[1.0, 0.0], &[0.0, 1.0]]))]);
    let r = run_json(&["algebra", p(&f)]);
    assert_eq!(r["result"]["structure"]["dim_algebra"], 1);
    assert_eq!(r["result"]["radical_dim"], 0);
}

#[test]
fn algebra_of_matrix_units_is_full_and_noncommutative() {
    let dir = TempDir::new().unwrap();
    let f = write_family(
        &dir,
        "m.json",
        &[("E12", real(&[&[0.0, 1.0], &[0.0, 0.0]])), ("E21", real(&[&[0.0, 0.0], &[1.0, 0.0]]))],
    );
    let r = run_json(&["algebra", p(&f)]);
    // E12, E21, E12E21 = E11, E21E12 = E22 span all of M_2, which is simple.
    assert_eq!(r["result"]["structure"]["dim_algebra"], 4);
    assert_eq!(r["result"]["radical_dim"], 0);
    assert_eq!(r["result"]["structure"]["quotient_dim"], 4);
    assert_eq!(r["result"]["quotient_commutativity"]["commutative"], false);
}

fn triangularize_to(dir: &TempDir, family: &Path, name: &str) -> PathBuf {
    let out = dir.path().join(name);
    let o = simtri(&["triangularize", p(family), "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    out
}

#[test]
fn fresh_reports_verify() {
    let dir = TempDir::new().unwrap();
    let f = golden_pair(&dir);
    let r = triangularize_to(&dir, &f, "r.json");
    let o = simtri(&["verify", p(&r)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));

    for cmd in ["check", "algebra"] {
        let out = dir.path().join(format!("{cmd}.json"));
        assert_eq!(code(&simtri(&[cmd, p(&f), "--out", p(&out)])), 0);
        let o = simtri(&["verify", p(&out)]);
        assert_eq!(code(&o), 0, "{cmd}: {}", String::from_utf8_lossy(&o.stdout));
    }
}

#[test]
fn tampered_triangular_form_fails_verification() {
    let dir = TempDir::new().unwrap();
    let f = golden_pair(&dir);
    let r = triangularize_to(&dir, &f, "r.json");
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&r).unwrap()).unwrap();
    let entry = &mut v["result"]["objects"][0]["triangular_forms"][0][0][1][0];
    *entry = json!(entry.as_f64().unwrap() + 1.0);
    std::fs::write(&r, serde_json::to_string(&v).unwrap()).unwrap();
    let o = simtri(&["verify", p(&r)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}

#[test]
fn tampered_family_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let f = golden_pair(&dir);
    let r = triangularize_to(&dir, &f, "r.json");
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&r).unwrap()).unwrap();
    v["family"]["matrices"][0]["entries"][1][1][0] = json!(5.0);
    std::fs::write(&r, serde_json::to_string(&v).unwrap()).unwrap();
    let o = simtri(&["verify", p(&r)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("digest"));
}

#[test]
fn duplicate_reports_are_rejected() {
    let dir = TempDir::new().unwrap();
    let f = golden_pair(&dir);
    let a = triangularize_to(&dir, &f, "a.json");
    let b = triangularize_to(&dir, &f, "b.json");
    let o = simtri(&["verify", p(&a), p(&b)]);
    assert_eq!(code(&o), 2);
}

#[test]
fn reverification_prints_both_tolerances() {
    let dir = TempDir::new().unwrap();
    let g = dir.path().join("g.json");
    assert_eq!(
        code(&simtri(&["generate", "--kind", "l_nilpotent", "--dim", "5", "--seed", "9", "--out", p(&g)])),
        0
    );
    let r = triangularize_to(&dir, &g, "r.json");
    // A tolerance far below the rounding level of the certificate.
    let o = simtri(&["verify", p(&r), "--zero-tol", "1e-30"]);
    let out = String::from_utf8_lossy(&o.stdout).into_owned();
    assert!(out.contains("report tolerances:") && out.contains("zero 1e-10"), "{out}");
    assert!(out.contains("verified at:") && out.contains("zero 1e-30"), "{out}");
    assert_eq!(code(&o), 1, "{out}");
}

#[test]
fn reports_are_deterministic_apart_from_timings() {
    let dir = TempDir::new().unwrap();
    let g = dir.path().join("g.json");
    simtri(&["generate", "--kind", "shemesh_ll", "--dim", "5", "--seed", "2", "--out", p(&g)]);
    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("timings");
        v
    };
    for cmd in ["check", "triangularize", "algebra"] {
        let a = strip(run_json(&[cmd, p(&g)]));
        let b = strip(run_json(&[cmd, p(&g)]));
        assert_eq!(a, b, "{cmd}");
    }
}

#[test]
fn generated_files_round_trip() {
    let dir = TempDir::new().unwrap();
    let g = dir.path().join("g.json");
    simtri(&["generate", "--kind", "normal_pair", "--dim", "3", "--seed", "1", "--out", p(&g)]);
    let text = std::fs::read_to_string(&g).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["recipe"]["kind"], "normal_pair");
    assert_eq!(v["matrices"].as_array().unwrap().len(), 2);
    let r = run_json(&["check", p(&g)]);
    assert_eq!(r["family"], v);
    assert_eq!(code(&simtri(&["generate", "--kind", "bogus", "--dim", "3"])), 2);
}

#[test]
fn reserialized_reports_still_verify() {
    let dir = TempDir::new().unwrap();
    let g = dir.path().join("g.json");
    simtri(&["generate", "--kind", "l_nilpotent", "--dim", "4", "--seed", "10", "--out", p(&g)]);
    let r = triangularize_to(&dir, &g, "r.json");
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&r).unwrap()).unwrap();
    std::fs::write(&r, serde_json::to_string(&v).unwrap()).unwrap();
    let o = simtri(&["verify", p(&r)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}
