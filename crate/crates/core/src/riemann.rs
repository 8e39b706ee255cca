//! Coordinate Riemannian geometry computed straight from a metric's jet.
//!
//! Nothing in here knows about stretch factors or bracket coefficients: the
//! curvature values come from Christoffel symbols and their derivatives, so
//! they serve as an independent reference for the closed forms elsewhere.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expr::Point;
use crate::fields::{gram_schmidt_adapted, inner_num, Distribution, Frame, MetricField, MetricJet, VectorField};

type Vec3 = [f64; 3];
type Mat3 = [[f64; 3]; 3];

/// Everything second-order about the metric at one point.
#[derive(Debug, Clone)]
pub struct LocalGeometry {
    pub point: Point,
    pub g: Mat3,
    pub g_inv: Mat3,
    /// `gamma[k][i][j] = Γ^k_ij`
    pub gamma: [[[f64; 3]; 3]; 3],
    /// `riemann[l][k][i][j]`: component `l` of `R(d_i, d_j) d_k`.
    pub riemann: [[[[f64; 3]; 3]; 3]; 3],
}

fn invert(m: &Mat3, point: &Point) -> Result<Mat3> {
    let det = crate::fields::det3(m);
    let scale = m.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
    if !det.is_finite() || det.abs() <= 1e-14 * scale.powi(3) {
        return Err(Error::SingularMetric { point: *point });
    }
    let mut inv = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (a, b) = ((j + 1) % 3, (j + 2) % 3);
            let (c, d) = ((i + 1) % 3, (i + 2) % 3);
            inv[i][j] = (m[a][c] * m[b][d] - m[a][d] * m[b][c]) / det;
        }
    }
    Ok(inv)
}

impl LocalGeometry {
    pub fn new(g: &MetricField, p: &Point) -> Result<Self> {
        Self::from_jet(&g.jet(p)?, p)
    }

    pub fn from_jet(jet: &MetricJet, p: &Point) -> Result<Self> {
        let MetricJet { g, dg, ddg } = jet;
        if !crate::fields::is_positive_definite(g) {
            return Err(Error::NotPositiveDefinite { point: *p });
        }
        let g_inv = invert(g, p)?;

        // first-kind symbols and their derivatives:
        // a[i][j][l] = d_i g_jl + d_j g_il - d_l g_ij
        let mut a = [[[0.0; 3]; 3]; 3];
        let mut da = [[[[0.0; 3]; 3]; 3]; 3]; // da[m][i][j][l]
        for i in 0..3 {
            for j in 0..3 {
                for l in 0..3 {
                    a[i][j][l] = dg[i][j][l] + dg[j][i][l] - dg[l][i][j];
                    for m in 0..3 {
                        da[m][i][j][l] = ddg[m][i][j][l] + ddg[m][j][i][l] - ddg[m][l][i][j];
                    }
                }
            }
        }
        // d_m g^{kl} = -g^{ka} d_m g_ab g^{bl}
        let mut dg_inv = [[[0.0; 3]; 3]; 3];
        for m in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    let mut s = 0.0;
                    for x in 0..3 {
                        for y in 0..3 {
                            s += g_inv[k][x] * dg[m][x][y] * g_inv[y][l];
                        }
                    }
                    dg_inv[m][k][l] = -s;
                }
            }
        }
        let mut gamma = [[[0.0; 3]; 3]; 3];
        let mut dgamma = [[[[0.0; 3]; 3]; 3]; 3]; // dgamma[m][k][i][j]
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let mut s = 0.0;
                    for l in 0..3 {
                        s += g_inv[k][l] * a[i][j][l];
                    }
                    gamma[k][i][j] = 0.5 * s;
                    for m in 0..3 {
                        let mut t = 0.0;
                        for l in 0..3 {
                            t += dg_inv[m][k][l] * a[i][j][l] + g_inv[k][l] * da[m][i][j][l];
                        }
                        dgamma[m][k][i][j] = 0.5 * t;
                    }
                }
            }
        }
        let mut riemann = [[[[0.0; 3]; 3]; 3]; 3];
        for l in 0..3 {
            for k in 0..3 {
                for i in 0..3 {
                    for j in 0..3 {
                        let mut r = dgamma[i][l][j][k] - dgamma[j][l][i][k];
                        for m in 0..3 {
                            r += gamma[l][i][m] * gamma[m][j][k] - gamma[l][j][m] * gamma[m][i][k];
                        }
                        riemann[l][k][i][j] = r;
                    }
                }
            }
        }
        Ok(LocalGeometry { point: *p, g: *g, g_inv, gamma, riemann })
    }

    pub fn inner(&self, s: &Vec3, t: &Vec3) -> f64 {
        inner_num(&self.g, s, t)
    }

    /// `R(S,T)U`.
    pub fn curvature(&self, s: &Vec3, t: &Vec3, u: &Vec3) -> Vec3 {
        let mut out = [0.0; 3];
        for (l, o) in out.iter_mut().enumerate() {
            for k in 0..3 {
                for i in 0..3 {
                    for j in 0..3 {
                        *o += self.riemann[l][k][i][j] * s[i] * t[j] * u[k];
                    }
                }
            }
        }
        out
    }

    /// Sectional curvature of the plane spanned by `s` and `t`.
    pub fn sectional(&self, s: &Vec3, t: &Vec3) -> Result<f64> {
        let (ss, tt, st) = (self.inner(s, s), self.inner(t, t), self.inner(s, t));
        let area = ss * tt - st * st;
        if area <= 1e-14 * ss * tt || ss == 0.0 {
            return Err(Error::Degenerate { what: "plane (dependent vectors)".into(), point: self.point });
        }
        Ok(self.inner(&self.curvature(s, t, t), s) / area)
    }

    /// `(nabla_S T)^k = S^i d_i T^k + Γ^k_ij S^i T^j`, given `jac_t[k][i] = d_i T^k`.
    pub fn covariant(&self, s: &Vec3, t: &Vec3, jac_t: &Mat3) -> Vec3 {
        let mut out = [0.0; 3];
        for (k, o) in out.iter_mut().enumerate() {
            for i in 0..3 {
                *o += s[i] * jac_t[k][i];
                for j in 0..3 {
                    *o += self.gamma[k][i][j] * s[i] * t[j];
                }
            }
        }
        out
    }
}

/// `Γ^k_ij` at `p`, indexed `[k][i][j]`.
pub fn christoffel(g: &MetricField, p: &Point) -> Result<[[[f64; 3]; 3]; 3]> {
    Ok(LocalGeometry::new(g, p)?.gamma)
}

pub fn covariant_derivative(g: &MetricField, s: &VectorField, t: &VectorField, p: &Point) -> Result<Vec3> {
    let geo = LocalGeometry::new(g, p)?;
    let (tv, jac) = t.eval_with_jacobian(p)?;
    Ok(geo.covariant(&s.eval(p)?, &tv, &jac))
}

pub fn sectional_oracle(g: &MetricField, s: &VectorField, t: &VectorField, p: &Point) -> Result<f64> {
    LocalGeometry::new(g, p)?.sectional(&s.eval(p)?, &t.eval(p)?)
}

/// Curvature data of a plane field at one point, in an adapted orthonormal
/// frame `(X, Y, n)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CurvatureReport {
    pub point: Point,
    /// Sectional curvature of the plane.
    pub k: f64,
    /// Extrinsic curvature `B_XX B_YY - B_XY^2`.
    pub k_e: f64,
    /// Gaussian curvature `k + k_e`.
    pub k_g: f64,
    pub b_xx: f64,
    pub b_xy: f64,
    pub b_yy: f64,
    /// `<[X,Y], n>`.
    pub c: f64,
}

struct FrameJet {
    v: [Vec3; 3],
    jac: [Mat3; 3],
}

fn frame_jet(frame: &Frame, p: &Point) -> Result<FrameJet> {
    let mut v = [[0.0; 3]; 3];
    let mut jac = [[[0.0; 3]; 3]; 3];
    for (i, f) in frame.members().into_iter().enumerate() {
        (v[i], jac[i]) = f.eval_with_jacobian(p)?;
    }
    Ok(FrameJet { v, jac })
}

fn check_gram(geo: &LocalGeometry, v: &[Vec3; 3]) -> Result<()> {
    let mut deviation: f64 = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            let target = if a == b { 1.0 } else { 0.0 };
            deviation = deviation.max((geo.inner(&v[a], &v[b]) - target).abs());
        }
    }
    if deviation > crate::fields::ORTHONORMAL_TOLERANCE {
        return Err(Error::NotOrthonormal { point: geo.point, deviation });
    }
    Ok(())
}

fn bracket(s: &Vec3, jac_s: &Mat3, t: &Vec3, jac_t: &Mat3) -> Vec3 {
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        for i in 0..3 {
            *o += s[i] * jac_t[k][i] - t[i] * jac_s[k][i];
        }
    }
    out
}

/// `(B_XX, B_XY, B_YY)` with `B(S,T) = <(nabla_S T + nabla_T S)/2, n>`.
pub fn second_fundamental_form(g: &MetricField, frame: &Frame, p: &Point) -> Result<(f64, f64, f64)> {
    let r = curvatures_in_frame(g, frame, p)?;
    Ok((r.b_xx, r.b_xy, r.b_yy))
}

/// Full curvature report for the plane spanned by `frame.x, frame.y`, which
/// must be orthonormal in `g` at `p`.
pub fn curvatures_in_frame(g: &MetricField, frame: &Frame, p: &Point) -> Result<CurvatureReport> {
    let geo = LocalGeometry::new(g, p)?;
    let fj = frame_jet(frame, p)?;
    report(&geo, &fj)
}

fn report(geo: &LocalGeometry, fj: &FrameJet) -> Result<CurvatureReport> {
    check_gram(geo, &fj.v)?;
    let [x, y, n] = &fj.v;
    let [jx, jy, _] = &fj.jac;
    let k = geo.sectional(x, y)?;
    let nxx = geo.covariant(x, x, jx);
    let nxy = geo.covariant(x, y, jy);
    let nyx = geo.covariant(y, x, jx);
    let nyy = geo.covariant(y, y, jy);
    let b_xx = geo.inner(&nxx, n);
    let b_yy = geo.inner(&nyy, n);
    let b_xy = 0.5 * (geo.inner(&nxy, n) + geo.inner(&nyx, n));
    let k_e = b_xx * b_yy - b_xy * b_xy;
    let c = geo.inner(&bracket(x, jx, y, jy), n);
    Ok(CurvatureReport { point: geo.point, k, k_e, k_g: k + k_e, b_xx, b_xy, b_yy, c })
}

/// Curvature reports for `frame` at every point, evaluated in parallel.
pub fn frame_curvatures(g: &MetricField, frame: &Frame, points: &[Point]) -> Result<Vec<CurvatureReport>> {
    points.par_iter().map(|p| curvatures_in_frame(g, frame, p)).collect()
}

/// Builds the adapted frame of `d` over `points` and reports its curvatures.
pub fn distribution_curvatures(
    g: &MetricField,
    d: &Distribution,
    points: &[Point],
) -> Result<(Frame, Vec<CurvatureReport>)> {
    let frame = gram_schmidt_adapted(g, d, points)?;
    let reports = frame_curvatures(g, &frame, points)?;
    Ok((frame, reports))
}

/// Extrinsic curvature from an arbitrary spanning pair `(S, T)`:
/// `(B(S,S) B(T,T) - B(S,T)^2) / (|S|^2 |T|^2 - <S,T>^2)`, where `B` is taken
/// against `n` normalized in `g`. `n` must be normal to the plane.
pub fn extrinsic_quotient(
    g: &MetricField,
    s: &VectorField,
    t: &VectorField,
    n: &VectorField,
    p: &Point,
) -> Result<f64> {
    let geo = LocalGeometry::new(g, p)?;
    let (sv, js) = s.eval_with_jacobian(p)?;
    let (tv, jt) = t.eval_with_jacobian(p)?;
    let nv = n.eval(p)?;
    let len = geo.inner(&nv, &nv).sqrt();
    let unit = nv.map(|c| c / len);
    let b = |u: &Vec3, ju: &Mat3, w: &Vec3, jw: &Mat3| {
        0.5 * (geo.inner(&geo.covariant(u, w, jw), &unit) + geo.inner(&geo.covariant(w, u, ju), &unit))
    };
    let (bss, btt, bst) = (b(&sv, &js, &sv, &js), b(&tv, &jt, &tv, &jt), b(&sv, &js, &tv, &jt));
    let area = geo.inner(&sv, &sv) * geo.inner(&tv, &tv) - geo.inner(&sv, &tv).powi(2);
    if area <= 0.0 {
        return Err(Error::Degenerate { what: "plane (dependent vectors)".into(), point: *p });
    }
    Ok((bss * btt - bst * bst) / area)
}

/// Sectional, extrinsic and Gaussian curvature of a plane field, with no
/// adapted frame involved.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PlaneCurvatures {
    pub point: Point,
    pub k: f64,
    pub k_e: f64,
    pub k_g: f64,
}

/// Plane-field curvatures from a raw spanning pair `(S, T)` and an
/// annihilating covector `omega`. The unit normal is `g^{-1} omega`
/// normalized numerically, and `K_e` is the quotient
/// `(B(S,S) B(T,T) - B(S,T)^2) / (|S|^2 |T|^2 - <S,T>^2)`.
pub fn plane_curvatures(
    geo: &LocalGeometry,
    s: (&Vec3, &Mat3),
    t: (&Vec3, &Mat3),
    omega: &Vec3,
) -> Result<PlaneCurvatures> {
    let k = geo.sectional(s.0, t.0)?;
    let mut n = [0.0; 3];
    for (i, ni) in n.iter_mut().enumerate() {
        for j in 0..3 {
            *ni += geo.g_inv[i][j] * omega[j];
        }
    }
    let len = geo.inner(&n, &n).sqrt();
    if !(len > 0.0) {
        return Err(Error::Degenerate { what: "plane normal".into(), point: geo.point });
    }
    let n = n.map(|c| c / len);
    let b = |u: (&Vec3, &Mat3), w: (&Vec3, &Mat3)| {
        0.5 * (geo.inner(&geo.covariant(u.0, w.0, w.1), &n) + geo.inner(&geo.covariant(w.0, u.0, u.1), &n))
    };
    let (bss, btt, bst) = (b(s, s), b(t, t), b(s, t));
    let area = geo.inner(s.0, s.0) * geo.inner(t.0, t.0) - geo.inner(s.0, t.0).powi(2);
    let k_e = (bss * btt - bst * bst) / area;
    Ok(PlaneCurvatures { point: geo.point, k, k_e, k_g: k + k_e })
}

/// [`plane_curvatures`] of `d` at every point, in point order.
pub fn plane_field_curvatures(g: &MetricField, d: &Distribution, points: &[Point]) -> Result<Vec<PlaneCurvatures>> {
    let (s, t) = crate::fields::spanning_pair(d, points)?;
    let omega = crate::expr::Tape::compile(&d.annihilator());
    points
        .par_iter()
        .map(|p| {
            let geo = LocalGeometry::new(g, p)?;
            let (sv, js) = s.eval_with_jacobian(p)?;
            let (tv, jt) = t.eval_with_jacobian(p)?;
            let w = omega.eval(p).map_err(crate::error::at(p))?;
            plane_curvatures(&geo, (&sv, &js), (&tv, &jt), &[w[0], w[1], w[2]])
        })
        .collect()
}
