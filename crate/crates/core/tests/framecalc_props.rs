use distcurv::expr::{parse_expr, Point, ScalarExpr};
use distcurv::fields::{gram_schmidt_adapted, Chart, Distribution, MetricField, OneForm};
use distcurv::framecalc::{
    anisotropic_frame, anisotropic_stretch, extract_frame_data, k_extrinsic_formula, k_gaussian_formula,
    k_sectional_formula, stretch_coefficients, stretch_metric, stretch_metric_unit, FrameData, StretchCoefficients,
};
use distcurv::models::builtin;
use distcurv::riemann::plane_field_curvatures;
use proptest::prelude::*;

fn skewed_metric() -> MetricField {
    MetricField::parse(["2 + sin(u2)", "0.3*cos(u3)", "0.2*u1", "1.5 + u3^2", "0.1*sin(u1*u2)", "2 + cos(u1)"]).unwrap()
}

fn setting() -> (MetricField, Distribution, Vec<Point>) {
    let points = Chart::cube(-1.0, 1.0, false).sample(25, 8);
    let d = Distribution::Kernel(OneForm::parse(["-u2", "0.3*u1", "1"]).unwrap());
    (skewed_metric(), d, points)
}

fn coefficients() -> impl Strategy<Value = StretchCoefficients> {
    (0.0f64..9.0, -10.0f64..10.0, -10.0f64..10.0).prop_map(|(c2, p, e)| StretchCoefficients { c2, p, e })
}

proptest! {
    #[test]
    fn gaussian_is_sectional_plus_extrinsic(sc in coefficients(), a in 0.01f64..100.0) {
        let k = k_sectional_formula(&sc, a).unwrap();
        let ke = k_extrinsic_formula(&sc, a).unwrap();
        let kg = k_gaussian_formula(&sc, a).unwrap();
        prop_assert!((k + ke - kg).abs() <= 1e-12 * (1.0 + kg.abs() + ke.abs()));
    }

    #[test]
    fn anisotropic_rule_composes(l in 0.2f64..5.0, m in 0.2f64..5.0) {
        let fd = FrameData { c: 1.3, bxy_x: 0.4, bxy_y: -0.7, bxn_x: 0.2, bxn_y: 1.1, byn_x: -0.5, byn_y: 0.9, dx: 0.3, dy: -1.2 };
        let a = fd.anisotropic(l).anisotropic(m);
        let b = fd.anisotropic(l * m);
        let (x, y) = (stretch_coefficients(&a), stretch_coefficients(&b));
        prop_assert!((x.p - y.p).abs() <= 1e-10 * (1.0 + y.p.abs()));
        prop_assert!((x.e - y.e).abs() <= 1e-10 * (1.0 + y.e.abs()));
    }
}

#[test]
fn nonpositive_stretch_is_rejected() {
    let sc = StretchCoefficients { c2: 1.0, p: 0.0, e: 0.0 };
    assert!(k_sectional_formula(&sc, 0.0).is_err());
    assert!(k_gaussian_formula(&sc, -1.0).is_err());
}

// a K(a) is a quadratic in a, so three oracle samples pin down c2, P and E
#[test]
fn oracle_samples_recover_the_coefficients() {
    let (g, d, points) = setting();
    let frame = gram_schmidt_adapted(&g, &d, &points).unwrap();
    let abc = [0.5, 1.0, 2.0];
    let ks: Vec<Vec<f64>> = abc
        .iter()
        .map(|a| {
            let s = stretch_metric_unit(&g, &frame.n, &ScalarExpr::num(*a));
            plane_field_curvatures(&s, &d, &points).unwrap().iter().map(|r| r.k).collect()
        })
        .collect();
    for (i, p) in points.iter().enumerate() {
        let y: Vec<f64> = (0..3).map(|j| abc[j] * ks[j][i]).collect();
        // Lagrange coefficients of y = q2 a^2 + q1 a + q0
        let mut q = [0.0; 3];
        for j in 0..3 {
            let others: Vec<f64> = (0..3).filter(|&k| k != j).map(|k| abc[k]).collect();
            let w = y[j] / ((abc[j] - others[0]) * (abc[j] - others[1]));
            q[2] += w;
            q[1] -= w * (others[0] + others[1]);
            q[0] += w * others[0] * others[1];
        }
        let sc = stretch_coefficients(&extract_frame_data(&g, &frame, p).unwrap());
        assert!((q[2] + 0.75 * sc.c2).abs() <= 1e-10, "{q:?} vs {sc:?}");
        assert!((q[1] - sc.p).abs() <= 1e-10, "{q:?} vs {sc:?}");
        assert!((q[0] + sc.e).abs() <= 1e-10, "{q:?} vs {sc:?}");
    }
}

// For a contact plane field the sectional curvature is unbounded below as
// the normal stretches, and the sign of E decides the limit as it shrinks.
#[test]
fn stretch_asymptotics_follow_the_coefficients() {
    let (g, d, points) = setting();
    let frame = gram_schmidt_adapted(&g, &d, &points).unwrap();
    for p in &points {
        let sc = stretch_coefficients(&extract_frame_data(&g, &frame, p).unwrap());
        assert!(sc.c2 > 0.0);
        assert!(k_sectional_formula(&sc, 1e6).unwrap() < -1e5 * sc.c2);
        let small = k_sectional_formula(&sc, 1e-9).unwrap();
        if sc.e.abs() > 1e-6 {
            assert_eq!(small.signum(), -sc.e.signum());
        }
    }
}

#[test]
fn normalizing_stretch_matches_unit_stretch() {
    let (g, d, points) = setting();
    let frame = gram_schmidt_adapted(&g, &d, &points).unwrap();
    let a = parse_expr("2 + sin(u3)").unwrap();
    let doubled = frame.n.scale(&ScalarExpr::num(2.0));
    let x = stretch_metric(&g, &doubled, &a);
    let y = stretch_metric_unit(&g, &frame.n, &a);
    for p in &points {
        let (gx, gy) = (x.eval(p).unwrap(), y.eval(p).unwrap());
        for i in 0..3 {
            for j in 0..3 {
                assert!((gx[i][j] - gy[i][j]).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn anisotropic_rule_matches_extraction() {
    let (g, d, points) = setting();
    let frame = gram_schmidt_adapted(&g, &d, &points).unwrap();
    for l in [0.5, 1.7] {
        let h = anisotropic_stretch(&g, &frame, l).unwrap();
        let f = anisotropic_frame(&frame, l);
        for p in &points {
            assert!(f.orthonormality_deviation(&h, p).unwrap() <= 1e-10);
            let direct = extract_frame_data(&h, &f, p).unwrap();
            let rule = extract_frame_data(&g, &frame, p).unwrap().anisotropic(l);
            for (x, y) in [
                (direct.c, rule.c),
                (direct.bxy_x, rule.bxy_x),
                (direct.bxy_y, rule.bxy_y),
                (direct.bxn_x, rule.bxn_x),
                (direct.bxn_y, rule.bxn_y),
                (direct.byn_x, rule.byn_x),
                (direct.byn_y, rule.byn_y),
                (direct.dx, rule.dx),
                (direct.dy, rule.dy),
            ] {
                assert!((x - y).abs() <= 1e-10, "l = {l}: {direct:?} vs {rule:?}");
            }
        }
    }
}

#[test]
fn propeller_frame_has_unit_bracket() {
    let geo = builtin("t3-propeller").unwrap().geometry.unwrap();
    let frame = geo.frame("bicontact").unwrap();
    let g = MetricField::from_orthonormal_frame(frame);
    for p in geo.chart.sample(20, 4) {
        let fd = extract_frame_data(&g, frame, &p).unwrap();
        assert!((fd.c - 1.0).abs() <= 1e-12, "{fd:?}");
    }
}

#[test]
fn su2_curvature_line() {
    let sc = stretch_coefficients(&FrameData::su2());
    assert_eq!((sc.c2, sc.p, sc.e), (4.0, 4.0, 0.0));
    assert_eq!(k_sectional_formula(&sc, 1.0).unwrap(), 1.0);
}
