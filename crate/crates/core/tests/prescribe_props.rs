use distcurv::expr::parse_expr;
use distcurv::fields::GridSpec;
use distcurv::models::builtin;
use distcurv::prescribe::{
    prescribe, solve_pointwise_linear, solve_pointwise_quadratic, verify_prescription, Method, PrescriptionProblem,
};
use distcurv::riemann::plane_field_curvatures;
use distcurv::Error;
use proptest::prelude::*;

fn problem(model: &str, dist: &str, target: &str, method: Method) -> PrescriptionProblem {
    let m = builtin(model).unwrap().geometry.unwrap();
    let mut p = PrescriptionProblem::new(
        format!("{model}/{dist}"),
        m.chart.clone(),
        m.metric.clone(),
        m.distribution(dist).unwrap(),
        parse_expr(target).unwrap(),
        method,
    );
    p.grid = GridSpec::uniform(8);
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    // asking for the curvature the unstretched metric already has returns a = 1
    #[test]
    fn current_curvature_gives_unit_stretch(c2 in 0.01f64..10.0, p in -10.0f64..10.0, r in 0.0f64..1.0) {
        let e = -10.0 + r * (0.75 * c2 + 10.0);
        let t = -0.75 * c2 + p - e;
        let a = solve_pointwise_quadratic(c2, p, e, t).unwrap();
        prop_assert!((a - 1.0).abs() <= 1e-10, "a = {a}");
        prop_assert!((solve_pointwise_linear(c2, p, -0.75 * c2 + p).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn quadratic_root_is_the_larger_one(c2 in 0.01f64..10.0, p in -10.0f64..10.0, e in -10.0f64..10.0, t in -10.0f64..10.0) {
        if let Ok(a) = solve_pointwise_quadratic(c2, p, e, t) {
            let other = (p - t) / (0.75 * c2) - a;
            prop_assert!(other <= a + 1e-9 * a.abs().max(1.0));
        }
    }
}

#[test]
fn heisenberg_and_sphere_prescriptions() {
    for (model, target, method) in [
        ("r3-heisenberg", "-1", Method::Sectional),
        ("r3-heisenberg", "-1 - u1^2", Method::Gaussian),
        ("s3-round", "-3 + cos(u1)", Method::Sectional),
        ("s3-round", "-0.5", Method::Gaussian),
    ] {
        let pb = problem(model, "xi", target, method);
        let r = prescribe(&pb).unwrap_or_else(|e| panic!("{model} {target}: {e}"));
        assert!(r.residual.max <= 1e-6, "{model} {target}: {:?}", r.residual);
        assert!(r.d0 >= 1.0 && r.rho == r.d0);
        let again = verify_prescription(&r.g_final, &pb).unwrap();
        assert_eq!(again.max, r.residual.max);
    }
}

#[test]
fn unstretched_metric_misses_the_target() {
    let pb = problem("t3-propeller", "eta", "-1", Method::Sectional);
    let r = verify_prescription(&pb.metric, &pb).unwrap();
    assert!(r.max >= 0.5, "{r:?}");
    assert!(prescribe(&pb).unwrap().residual.max <= 1e-10);
}

#[test]
fn final_metric_has_stretched_normal() {
    let pb = problem("t3-propeller", "eta", "-2 + sin(u3)", Method::Gaussian);
    let r = prescribe(&pb).unwrap();
    let points = pb.chart.grid(&pb.grid);
    let measured = plane_field_curvatures(&r.g_final, &pb.distribution, &points).unwrap();
    for (p, m) in points.iter().zip(&measured) {
        let a = r.a.eval(p).unwrap();
        assert!(a > 0.0);
        let n2 = r.g_final.pair(&r.frame.n, &r.frame.n).eval(p).unwrap();
        assert!((n2 - r.rho * a).abs() <= 1e-10 * n2);
        assert!((m.k_g - (-2.0 + p.0[2].sin())).abs() <= 1e-8);
    }
}

#[test]
fn sectional_methods_need_a_negative_target() {
    for method in [Method::Sectional, Method::Gaussian] {
        let pb = problem("t3-propeller", "eta", "sin(u3)", method);
        assert!(matches!(prescribe(&pb), Err(Error::InvalidParameter(_))));
    }
}

#[test]
fn bicontact_method_needs_a_frame_and_a_pair() {
    let pb = problem("t3-propeller", "xi", "1", Method::SectionalBicontact);
    assert!(matches!(prescribe(&pb), Err(Error::InvalidParameter(_))));

    let geo = builtin("t3-propeller").unwrap().geometry.unwrap();
    let mut pb = problem("t3-propeller", "xi", "1", Method::SectionalBicontact);
    pb.frame = Some(geo.frame("bicontact").unwrap().clone());
    pb.eta = Some(geo.distribution("xi").unwrap());
    assert!(matches!(prescribe(&pb), Err(Error::NotApplicable(_))));

    pb.eta = Some(geo.distribution("eta").unwrap());
    let r = prescribe(&pb).unwrap();
    assert_eq!(r.base_metric, "frame");
    assert_eq!(r.lambda, 2f64.sqrt());
    assert!(r.residual.max <= 1e-10);
}

#[test]
fn bicontact_reaches_positive_targets() {
    let geo = builtin("t3-propeller").unwrap().geometry.unwrap();
    let mut pb = problem("t3-propeller", "xi", "3 + cos(u1)", Method::SectionalBicontact);
    pb.frame = Some(geo.frame("bicontact").unwrap().clone());
    let r = prescribe(&pb).unwrap();
    assert!(r.residual.max <= 1e-8, "{:?}", r.residual);
}
