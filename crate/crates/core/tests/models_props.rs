use distcurv::expr::Point;
use distcurv::fields::{check_contact, check_transverse_pair, GridSpec};
use distcurv::models::{builtin, load_model, resolve, Model, BUILTINS};
use distcurv::Error;
use serde_json::json;

#[test]
fn builtins_pass_their_checks() {
    for (name, _) in BUILTINS {
        let m = builtin(name).unwrap();
        m.check(&GridSpec::uniform(8)).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(resolve(name).unwrap().name, *name);
    }
    assert!(matches!(builtin("no-such-model"), Err(Error::Unknown { .. })));
}

#[test]
fn json_round_trip_preserves_every_field() {
    let points: Vec<Point> =
        (0..20).map(|i| Point::new(0.1 + 0.03 * i as f64, 0.2 - 0.02 * i as f64, 0.7 + 0.01 * i as f64)).collect();
    for (name, _) in BUILTINS {
        let m = builtin(name).unwrap();
        let back = Model::from_json(&m.to_json()).unwrap();
        assert_eq!(back.name, m.name);
        assert_eq!(back.frame_data, m.frame_data);
        let (Some(a), Some(b)) = (&m.geometry, &back.geometry) else { continue };
        assert_eq!(a.chart, b.chart);
        for p in &points {
            let (ga, gb) = (a.metric.eval(p).unwrap(), b.metric.eval(p).unwrap());
            for i in 0..3 {
                for j in 0..3 {
                    assert!((ga[i][j] - gb[i][j]).abs() <= 1e-12);
                }
            }
            for (k, f) in &a.one_forms {
                let (x, y) = (f.eval(p).unwrap(), b.one_forms[k].eval(p).unwrap());
                assert!(x.iter().zip(y).all(|(u, v)| (u - v).abs() <= 1e-12), "{name} {k}");
            }
            for (k, f) in &a.frames {
                for (u, v) in f.members().iter().zip(b.frames[k].members()) {
                    let (x, y) = (u.eval(p).unwrap(), v.eval(p).unwrap());
                    assert!(x.iter().zip(y).all(|(s, t)| (s - t).abs() <= 1e-12), "{name} {k}");
                }
            }
        }
        assert_eq!(a.distributions.len(), b.distributions.len());
    }
}

fn minimal(metric: serde_json::Value, alpha: [&str; 3]) -> serde_json::Value {
    json!({
        "name": "test",
        "domain": [[-1, 1], [-1, 1], [-1, 1]],
        "metric": metric,
        "one_forms": { "alpha": alpha },
        "distributions": { "xi": { "kernel": "alpha" } }
    })
}

fn euclidean() -> serde_json::Value {
    json!({ "g11": "1", "g12": "0", "g13": "0", "g22": "1", "g23": "0", "g33": "1" })
}

#[test]
fn lower_triangle_key_is_a_schema_error() {
    let mut metric = euclidean();
    metric["g21"] = json!("0");
    match Model::from_json(&minimal(metric, ["0", "0", "1"])) {
        Err(Error::Schema { field, .. }) => assert_eq!(field, "metric.g21"),
        other => panic!("expected a schema error, got {other:?}"),
    }
}

#[test]
fn malformed_entries_are_schema_errors() {
    let mut metric = euclidean();
    metric["g11"] = json!("1 +");
    assert!(matches!(Model::from_json(&minimal(metric, ["0", "0", "1"])), Err(Error::Schema { .. })));
    let mut v = minimal(euclidean(), ["0", "0", "1"]);
    v["distributions"]["xi"] = json!({ "kernel": "gamma" });
    assert!(matches!(Model::from_json(&v), Err(Error::Schema { .. })));
    let mut v = minimal(euclidean(), ["0", "0", "1"]);
    v["colour"] = json!("red");
    assert!(matches!(Model::from_json(&v), Err(Error::Schema { .. })));
}

#[test]
fn vanishing_form_names_the_point() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    // vanishes at the grid corner (1, 1, 1)
    let text = serde_json::to_string_pretty(&minimal(euclidean(), ["u1 - 1", "u2 - 1", "u3 - 1"])).unwrap();
    std::fs::write(&path, text).unwrap();
    match load_model(&path) {
        Err(Error::Degenerate { point, what }) => {
            assert_eq!(point, Point::new(1.0, 1.0, 1.0), "{what}");
        }
        other => panic!("expected a degeneracy, got {other:?}"),
    }
}

#[test]
fn file_models_load_and_check() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("heis.json");
    std::fs::write(&path, serde_json::to_string(&minimal(euclidean(), ["-u2", "0", "1"])).unwrap()).unwrap();
    let m = resolve(path.to_str().unwrap()).unwrap();
    let geo = m.geometry().unwrap();
    let points = geo.chart.grid(&GridSpec::uniform(5));
    assert!(check_contact(&geo.distribution("xi").unwrap(), None, &points).unwrap().is_contact);
}

#[test]
fn contact_roles_of_the_builtins() {
    let expect = [
        ("t3-propeller", "xi", Some(Some(1))),
        ("t3-propeller", "eta", Some(Some(-1))),
        ("t3-flat-foliation", "xi", None),
        ("r3-heisenberg", "xi", Some(Some(1))),
        ("s3-round", "xi", Some(Some(1))),
        ("hyperbolic-halfspace", "xi", None),
    ];
    for (model, dist, role) in expect {
        let geo = builtin(model).unwrap().geometry.unwrap();
        let points = geo.chart.grid(&GridSpec::uniform(6));
        let r = check_contact(&geo.distribution(dist).unwrap(), Some(&geo.metric), &points).unwrap();
        match role {
            Some(sign) => {
                assert!(r.is_contact, "{model}/{dist}");
                assert_eq!(r.sign, sign, "{model}/{dist}");
            }
            None => assert!(!r.is_contact, "{model}/{dist}"),
        }
    }
    let geo = builtin("t3-propeller").unwrap().geometry.unwrap();
    let points = geo.chart.grid(&GridSpec::uniform(6));
    let pair =
        check_transverse_pair(&geo.distribution("xi").unwrap(), &geo.distribution("eta").unwrap(), None, &points)
            .unwrap();
    assert!(pair.is_bicontact);
}

#[test]
fn propeller_frame_is_adapted_to_both_planes() {
    let geo = builtin("t3-propeller").unwrap().geometry.unwrap();
    let frame = geo.frame("bicontact").unwrap();
    let (alpha, beta) = (geo.form("alpha").unwrap(), geo.form("beta").unwrap());
    for p in geo.chart.sample(50, 2) {
        let ev = |f: &distcurv::fields::OneForm, v: &distcurv::fields::VectorField| f.apply(v).eval(&p).unwrap();
        assert!(ev(alpha, &frame.x).abs() <= 1e-12);
        assert!(ev(beta, &frame.x).abs() <= 1e-12);
        assert!(ev(alpha, &frame.y).abs() <= 1e-12);
        assert!((ev(beta, &frame.y) - 1.0).abs() <= 1e-12);
        assert!(ev(beta, &frame.n).abs() <= 1e-12);
        assert!((ev(alpha, &frame.n) - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn frame_data_only_models_have_no_geometry() {
    let m = builtin("su2-constants").unwrap();
    assert!(matches!(m.geometry(), Err(Error::NotApplicable(_))));
    let back = Model::from_json(&json!({ "name": "k", "frame_data": { "c": 1.0, "bxy_x": 0.0, "bxy_y": 0.0, "bxn_x": 0.0, "bxn_y": 0.0, "byn_x": 0.0, "byn_y": 0.0, "dx": 0.0, "dy": 0.0 } })).unwrap();
    assert_eq!(back.frame_data.unwrap().c, 1.0);
}
