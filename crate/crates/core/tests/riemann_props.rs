#![allow(clippy::needless_range_loop)]

use distcurv::expr::{parse_expr, Point};
use distcurv::fields::{gram_schmidt_adapted, Chart, Distribution, MetricField, OneForm, VectorField};
use distcurv::riemann::{
    curvatures_in_frame, extrinsic_quotient, plane_field_curvatures, sectional_oracle, LocalGeometry,
};

fn skewed_metric() -> MetricField {
    MetricField::parse(["2 + sin(u2)", "0.3*cos(u3)", "0.2*u1", "1.5 + u3^2", "0.1*sin(u1*u2)", "2 + cos(u1)"]).unwrap()
}

fn samples(n: usize) -> Vec<Point> {
    Chart::cube(-1.0, 1.0, false).sample(n, 29)
}

fn lowered(geo: &LocalGeometry) -> [[[[f64; 3]; 3]; 3]; 3] {
    let mut out = [[[[0.0; 3]; 3]; 3]; 3];
    for m in 0..3 {
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    out[m][k][i][j] = (0..3).map(|l| geo.g[m][l] * geo.riemann[l][k][i][j]).sum();
                }
            }
        }
    }
    out
}

#[test]
fn curvature_tensor_symmetries() {
    let g = skewed_metric();
    for p in samples(30) {
        let geo = LocalGeometry::new(&g, &p).unwrap();
        let r = lowered(&geo);
        let scale = 1.0 + r.iter().flatten().flatten().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    for d in 0..3 {
                        assert!((r[a][b][c][d] + r[a][b][d][c]).abs() <= 1e-7 * scale);
                        assert!((r[a][b][c][d] + r[b][a][c][d]).abs() <= 1e-7 * scale);
                        assert!((r[a][b][c][d] - r[c][d][a][b]).abs() <= 1e-7 * scale);
                        let bianchi = geo.riemann[a][b][c][d] + geo.riemann[a][c][d][b] + geo.riemann[a][d][b][c];
                        assert!(bianchi.abs() <= 1e-7 * scale, "Bianchi {bianchi} at {p}");
                    }
                }
            }
        }
    }
}

#[test]
fn christoffel_symbols_are_symmetric() {
    let g = skewed_metric();
    for p in samples(10) {
        let gamma = LocalGeometry::new(&g, &p).unwrap().gamma;
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    assert!((gamma[k][i][j] - gamma[k][j][i]).abs() <= 1e-12);
                }
            }
        }
    }
}

#[test]
fn plane_curvatures_ignore_the_spanning_pair() {
    let g = skewed_metric();
    let points = samples(40);
    let s = VectorField::parse(["1", "u3", "sin(u1)"]).unwrap();
    let t = VectorField::parse(["u2", "2", "cos(u3)"]).unwrap();
    let k1 = parse_expr("2 + sin(u1*u3)").unwrap();
    let k2 = parse_expr("0.5*u2").unwrap();
    let k3 = parse_expr("u1^2").unwrap();
    let k4 = parse_expr("1.5 + cos(u2)").unwrap();
    // determinant (2 + sin)(1.5 + cos) - 0.5 u1^2 u2 stays positive on the cube
    let s2 = s.scale(&k1).add(&t.scale(&k2));
    let t2 = s.scale(&k3).add(&t.scale(&k4));
    let a = plane_field_curvatures(&g, &Distribution::Span(s, t), &points).unwrap();
    let b = plane_field_curvatures(&g, &Distribution::Span(s2, t2), &points).unwrap();
    for (x, y) in a.iter().zip(&b) {
        for (u, v) in [(x.k, y.k), (x.k_e, y.k_e), (x.k_g, y.k_g)] {
            assert!((u - v).abs() <= 1e-8 * (1.0 + u.abs()), "{u} vs {v} at {}", x.point);
        }
    }
}

#[test]
fn kernel_curvatures_ignore_the_form_scale() {
    let g = skewed_metric();
    let points = samples(40);
    let a = OneForm::parse(["-u2", "0.3", "1"]).unwrap();
    let b = OneForm::parse(["-u2*(2 + sin(u1))", "0.3*(2 + sin(u1))", "2 + sin(u1)"]).unwrap();
    let x = plane_field_curvatures(&g, &Distribution::Kernel(a), &points).unwrap();
    let y = plane_field_curvatures(&g, &Distribution::Kernel(b), &points).unwrap();
    for (x, y) in x.iter().zip(&y) {
        assert!((x.k - y.k).abs() <= 1e-10 && (x.k_e - y.k_e).abs() <= 1e-10);
    }
}

#[test]
fn frame_and_frame_free_routes_agree() {
    let g = skewed_metric();
    let points = samples(30);
    let d = Distribution::Kernel(OneForm::parse(["-u2", "0.3", "1"]).unwrap());
    let frame = gram_schmidt_adapted(&g, &d, &points).unwrap();
    let free = plane_field_curvatures(&g, &d, &points).unwrap();
    for (p, q) in points.iter().zip(&free) {
        let r = curvatures_in_frame(&g, &frame, p).unwrap();
        let quotient = extrinsic_quotient(&g, &frame.x, &frame.y, &frame.n, p).unwrap();
        let sectional = sectional_oracle(&g, &frame.x, &frame.y, p).unwrap();
        assert!((r.k_e - quotient).abs() <= 1e-10);
        assert!((r.k - sectional).abs() <= 1e-10);
        assert!((r.k - q.k).abs() <= 1e-9 && (r.k_e - q.k_e).abs() <= 1e-9);
        assert!((r.k_g - r.k - r.k_e).abs() <= 1e-12);
    }
}

#[test]
fn curvature_scales_inversely_with_the_metric() {
    let g = skewed_metric();
    let points = samples(30);
    let d = Distribution::Kernel(OneForm::parse(["-u2", "0.3", "1"]).unwrap());
    let base = plane_field_curvatures(&g, &d, &points).unwrap();
    for rho in [0.1, 3.0, 250.0] {
        let scaled = plane_field_curvatures(&g.scaled(rho), &d, &points).unwrap();
        for (s, b) in scaled.iter().zip(&base) {
            for (x, y) in [(s.k, b.k), (s.k_e, b.k_e), (s.k_g, b.k_g)] {
                assert!((x - y / rho).abs() <= 1e-8 * (1.0 + (y / rho).abs()));
            }
        }
    }
}

#[test]
fn space_forms() {
    let points: Vec<Point> = samples(20).into_iter().map(|p| Point::new(p.0[0], p.0[1], 1.0 + 0.5 * p.0[2])).collect();
    let sphere = MetricField::conformal(&parse_expr("4/(1 + u1^2 + u2^2 + u3^2)^2").unwrap());
    let hyperbolic = MetricField::conformal(&parse_expr("1/u3^2").unwrap());
    let s = VectorField::parse(["1", "u3", "0.2"]).unwrap();
    let t = VectorField::parse(["sin(u1)", "1", "u2"]).unwrap();
    for p in &points {
        assert!((sectional_oracle(&sphere, &s, &t, p).unwrap() - 1.0).abs() <= 1e-10);
        assert!((sectional_oracle(&hyperbolic, &s, &t, p).unwrap() + 1.0).abs() <= 1e-10);
    }
}
