use distcurv::expr::Point;
use distcurv::fields::{
    check_contact, check_transverse_pair, gram_schmidt_adapted, lie_bracket, Chart, ContactInvariant, Distribution,
    GridSpec, MetricField, OneForm, VectorField,
};
use distcurv::Error;

fn skewed_metric() -> MetricField {
    MetricField::parse(["2 + sin(u2)", "0.3*cos(u3)", "0.2*u1", "1.5 + u3^2", "0.1*sin(u1*u2)", "2 + cos(u1)"]).unwrap()
}

fn fields() -> [VectorField; 3] {
    [
        VectorField::parse(["sin(u2)", "u1*u3", "1"]).unwrap(),
        VectorField::parse(["u3^2", "cos(u1)", "u2"]).unwrap(),
        VectorField::parse(["exp(u1*u2)", "1", "sin(u3) + u1"]).unwrap(),
    ]
}

fn samples(n: usize) -> Vec<Point> {
    Chart::cube(-1.0, 1.0, false).sample(n, 17)
}

fn max_abs(v: [f64; 3]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[test]
fn bracket_satisfies_jacobi() {
    let [x, y, z] = fields();
    let jac = lie_bracket(&x, &lie_bracket(&y, &z))
        .add(&lie_bracket(&y, &lie_bracket(&z, &x)))
        .add(&lie_bracket(&z, &lie_bracket(&x, &y)));
    for p in samples(100) {
        let v = jac.eval(&p).unwrap();
        assert!(max_abs(v) <= 1e-8, "{v:?} at {p}");
    }
}

#[test]
fn bracket_is_antisymmetric() {
    let [x, y, _] = fields();
    let sum = lie_bracket(&x, &y).add(&lie_bracket(&y, &x));
    for p in samples(100) {
        assert!(max_abs(sum.eval(&p).unwrap()) <= 1e-12);
    }
}

#[test]
fn adapted_frames_are_orthonormal() {
    let g = skewed_metric();
    let points = samples(100);
    let dists = [
        Distribution::Kernel(OneForm::parse(["u2", "1", "sin(u1) + 2"]).unwrap()),
        Distribution::Kernel(OneForm::parse(["1 + u3^2", "0.5*u1", "cos(u2)"]).unwrap()),
        Distribution::Span(fields()[0].clone(), fields()[1].clone()),
    ];
    for d in &dists {
        let frame = gram_schmidt_adapted(&g, d, &points).unwrap();
        for p in &points {
            assert!(frame.orthonormality_deviation(&g, p).unwrap() <= 1e-10);
            assert!(frame.orientation(p).unwrap() > 0.0);
            if let Distribution::Kernel(form) = d {
                for v in [&frame.x, &frame.y] {
                    assert!(form.apply(v).eval(p).unwrap().abs() <= 1e-12);
                }
                let w = form.eval(p).unwrap();
                let n = frame.n.eval(p).unwrap();
                assert!(w.iter().zip(n).map(|(a, b)| a * b).sum::<f64>() > 0.0);
            }
        }
    }
}

#[test]
fn integrable_and_contact_kernels_are_told_apart() {
    let points = Chart::cube(-1.0, 1.0, false).grid(&GridSpec::uniform(6));
    // d(exp(u1) u3) vanishes nowhere and is closed
    let closed = Distribution::Kernel(OneForm::parse(["exp(u1)*u3", "0", "exp(u1)"]).unwrap());
    let report = check_contact(&closed, None, &points).unwrap();
    assert!(!report.is_contact);
    assert!(report.max_abs <= 1e-12);

    let heis = Distribution::Kernel(OneForm::parse(["-u2", "0", "1"]).unwrap());
    let report = check_contact(&heis, None, &points).unwrap();
    assert!(report.is_contact);
    assert_eq!(report.sign, Some(1));
}

#[test]
fn form_and_bracket_invariants_agree_on_sign() {
    let g = skewed_metric();
    let points = samples(40);
    for (form, expected) in [(["-u2", "0", "1"], 1), (["u2", "0", "1"], -1), (["cos(u3)", "sin(u3)", "0"], -1)] {
        let alpha = OneForm::parse(form).unwrap();
        let kernel = Distribution::Kernel(alpha);
        let by_form = check_contact(&kernel, None, &points).unwrap();
        let frame = gram_schmidt_adapted(&g, &kernel, &points).unwrap();
        let span = Distribution::Span(frame.x.clone(), frame.y.clone());
        let by_bracket = check_contact(&span, Some(&g), &points).unwrap();
        assert_eq!(by_form.invariant, ContactInvariant::Form);
        assert_eq!(by_bracket.invariant, ContactInvariant::Bracket);
        assert_eq!(by_form.sign, Some(expected), "{form:?}");
        assert_eq!(by_bracket.sign, Some(expected), "{form:?}");
    }
}

#[test]
fn tangent_pair_is_not_transverse() {
    let points = samples(20);
    let a = Distribution::Kernel(OneForm::parse(["-u2", "0", "1"]).unwrap());
    let b = Distribution::Kernel(OneForm::parse(["-2*u2", "0", "2"]).unwrap());
    let report = check_transverse_pair(&a, &b, None, &points).unwrap();
    assert!(report.min_transversality <= 1e-12);
    assert!(!report.is_bicontact);
}

#[test]
fn vanishing_form_is_degenerate() {
    let d = Distribution::Kernel(OneForm::parse(["u1", "u2", "u3"]).unwrap());
    let points = vec![Point::new(0.5, 0.1, 0.2), Point::new(0.0, 0.0, 0.0)];
    match gram_schmidt_adapted(&MetricField::euclidean(), &d, &points) {
        Err(Error::Degenerate { point, .. }) => assert_eq!(point, Point::new(0.0, 0.0, 0.0)),
        other => panic!("expected a degeneracy, got {other:?}"),
    }
}

#[test]
fn indefinite_metric_is_rejected() {
    let g = MetricField::parse(["1", "2", "0", "1", "0", "1"]).unwrap();
    assert!(matches!(g.check_positive_definite(&[Point::new(0.0, 0.0, 0.0)]), Err(Error::NotPositiveDefinite { .. })));
}
