use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_distcurv")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// CSV rows as floats, header checked.
fn table(o: &Output) -> Vec<Vec<f64>> {
    let text = stdout(o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("u1,u2,u3,K,Ke,KG,c,B_XX,B_XY,B_YY"));
    lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect()
}

#[test]
fn flat_foliation_has_zero_curvature() {
    let o = run(&["curvature", "--model", "t3-flat-foliation", "--dist", "xi", "--grid", "4"]);
    assert_eq!(code(&o), 0);
    let rows = table(&o);
    assert_eq!(rows.len(), 64);
    assert!(rows.iter().all(|r| r[3] == 0.0 && r[4] == 0.0 && r[5] == 0.0));
}

#[test]
fn sphere_contact_planes_have_unit_gaussian_curvature() {
    let rows = table(&run(&["curvature", "--model", "s3-round", "--dist", "xi", "--grid", "6"]));
    assert_eq!(rows.len(), 216);
    assert!(rows.iter().all(|r| (r[5] - 1.0).abs() <= 1e-5));
}

#[test]
fn horospheres() {
    let rows = table(&run(&["curvature", "--model", "hyperbolic-halfspace", "--dist", "xi", "--grid", "6"]));
    for r in rows {
        assert!((r[3] + 1.0).abs() <= 1e-6 && (r[4] - 1.0).abs() <= 1e-6 && r[5].abs() <= 1e-6, "{r:?}");
    }
}

#[test]
fn stretched_curvature_follows_the_closed_form() {
    // constant a = 2 lowers K_G by 3/4 c^2 in a flat ambient
    let base = table(&run(&["curvature", "--model", "r3-heisenberg", "--dist", "xi", "--grid", "3"]));
    let stretched = table(&run(&["curvature", "--model", "r3-heisenberg", "--dist", "xi", "--grid", "3", "--a", "2"]));
    for (b, s) in base.iter().zip(&stretched) {
        let c2 = b[6] * b[6];
        assert!((s[5] - (b[5] - 0.75 * c2)).abs() <= 1e-10, "{b:?} {s:?}");
    }
    let o = run(&["curvature", "--model", "r3-heisenberg", "--dist", "xi", "--a", "u1"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn csv_output_is_reproducible() {
    let args = ["curvature", "--model", "t3-propeller", "--dist", "eta", "--grid", "5", "--a", "2 + sin(u3)"];
    let a = run(&args);
    let b = Command::new(env!("CARGO_BIN_EXE_distcurv")).args(args).env("DISTCURV_THREADS", "1").output().unwrap();
    let mut with_flag = vec!["--threads", "3"];
    with_flag.extend(args);
    let c = run(&with_flag);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn csv_floats_round_trip() {
    let o = run(&["curvature", "--model", "s3-round", "--dist", "xi", "--grid", "3"]);
    for line in stdout(&o).lines().skip(1) {
        for field in line.split(',') {
            let v: f64 = field.parse().unwrap();
            assert_eq!(format!("{v:.16e}"), field);
        }
    }
}

#[test]
fn json_reports_carry_a_schema_version() {
    let o = run(&["curvature", "--model", "t3-propeller", "--dist", "xi", "--grid", "2", "--format", "json"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["rows"].as_array().unwrap().len(), 8);
    let o = run(&["check", "--model", "t3-propeller", "--contact", "xi", "--format", "json"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["passed"], true);
}

#[test]
fn contact_checks() {
    assert_eq!(code(&run(&["check", "--model", "t3-propeller", "--bicontact", "alpha", "beta"])), 0);
    assert_eq!(code(&run(&["check", "--model", "t3-propeller", "--bicontact", "xi", "eta"])), 0);
    assert_eq!(code(&run(&["check", "--model", "t3-flat-foliation", "--contact", "xi"])), 1);
    let o = run(&["check", "--model", "r3-heisenberg", "--contact", "alpha"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("min |c| = 1.000000e0"), "{}", stdout(&o));
    // a plane field is not transverse to itself
    assert_eq!(code(&run(&["check", "--model", "t3-propeller", "--bicontact", "alpha", "alpha"])), 1);
    assert_eq!(code(&run(&["check", "--model", "t3-propeller", "--contact", "nope"])), 2);
    assert_eq!(code(&run(&["check", "--model", "t3-propeller"])), 2);
}

#[test]
fn prescription_runs() {
    let o = run(&["prescribe", "--model", "t3-propeller", "--dist", "xi", "--method", "gaussian", "--target", "-1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["residual"]["max"].as_f64().unwrap() <= 1e-4);

    let o = run(&[
        "prescribe",
        "--model",
        "t3-propeller",
        "--dist",
        "xi",
        "--method",
        "sectional-bicontact",
        "--eta",
        "eta",
        "--target",
        "1",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["lambda"].as_f64().unwrap() - 2f64.sqrt()).abs() <= 1e-15);
    assert_eq!(v["base_metric"], "frame");
}

#[test]
fn prescription_failures_have_distinct_codes() {
    let flat =
        run(&["prescribe", "--model", "t3-flat-foliation", "--dist", "xi", "--method", "sectional", "--target", "-1"]);
    assert_eq!(code(&flat), 4);
    let positive =
        run(&["prescribe", "--model", "t3-propeller", "--dist", "xi", "--method", "sectional", "--target", "1"]);
    assert_eq!(code(&positive), 2);
    let unknown = run(&["prescribe", "--model", "t3-propeller", "--dist", "xi", "--method", "other", "--target", "-1"]);
    assert_eq!(code(&unknown), 2);
    let same = run(&[
        "prescribe",
        "--model",
        "t3-propeller",
        "--dist",
        "xi",
        "--method",
        "sectional-bicontact",
        "--eta",
        "xi",
        "--target",
        "1",
    ]);
    assert_eq!(code(&same), 7);
    let tight = run(&[
        "prescribe",
        "--model",
        "t3-propeller",
        "--dist",
        "eta",
        "--method",
        "sectional",
        "--target",
        "-1",
        "--tol",
        "1e-300",
    ]);
    assert_eq!(code(&tight), 1);
}

#[test]
fn prescription_fields_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let o = run(&[
        "prescribe",
        "--model",
        "t3-propeller",
        "--dist",
        "eta",
        "--method",
        "sectional",
        "--target",
        "-2 + sin(u3)",
        "--grid",
        "4",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let fields = &v["fields"];
    assert_eq!(fields["points"].as_array().unwrap().len(), 64);
    assert!(fields["a"].as_array().unwrap().iter().all(|a| a.as_f64().unwrap() > 0.0));
    assert_eq!(fields["g_final"][0].as_array().unwrap().len(), 6);
}

#[test]
fn validation_suites() {
    let o = run(&["validate", "--suite", "lemma31", "--samples", "200", "--seed", "7", "--tol", "1e-6"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("model t3-propeller: max deviation"));
    assert_eq!(code(&run(&["validate", "--suite", "frame-invariance"])), 0);
    assert_eq!(code(&run(&["validate", "--suite", "fd"])), 0);
    let o = run(&["validate", "--suite", "sign-calibration", "--samples", "50", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["passing_signs"], serde_json::json!([[1.0, -1.0]]));
    assert_eq!(code(&run(&["validate", "--suite", "lemma32", "--samples", "20", "--tol", "1e-30"])), 1);
    assert_eq!(code(&run(&["validate", "--suite", "nope"])), 2);
}

#[test]
fn models_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("heis.json");
    let o = run(&["models", "r3-heisenberg"]);
    std::fs::write(&path, &o.stdout).unwrap();
    let p = path.to_str().unwrap();
    assert_eq!(code(&run(&["check", "--model", p, "--contact", "xi"])), 0);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"name": "b", "domain": [[0,1],[0,1],[0,1]], "metric": {"g11": "1", "g21": "0"}}"#)
        .unwrap();
    let o = run(&["curvature", "--model", bad.to_str().unwrap(), "--dist", "xi"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("metric.g21"));

    let vanishing = dir.path().join("vanishing.json");
    std::fs::write(
        &vanishing,
        r#"{"name": "v", "domain": [[-1,1],[-1,1],[-1,1]],
            "metric": {"g11": "1", "g12": "0", "g13": "0", "g22": "1", "g23": "0", "g33": "1"},
            "one_forms": {"alpha": ["u1 - 1", "u2 - 1", "u3 - 1"]},
            "distributions": {"xi": {"kernel": "alpha"}}}"#,
    )
    .unwrap();
    assert_eq!(code(&run(&["curvature", "--model", vanishing.to_str().unwrap(), "--dist", "xi"])), 3);

    let list = stdout(&run(&["models"]));
    assert_eq!(list.lines().count(), 6);
    assert_eq!(code(&run(&["curvature", "--model", "su2-constants", "--dist", "xi"])), 7);
    assert_eq!(code(&run(&["curvature", "--model", "nowhere.json", "--dist", "xi"])), 2);
}
