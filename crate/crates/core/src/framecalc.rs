//! Closed-form curvature of a plane field under stretching along its normal.
//!
//! For an orthonormal adapted frame `(X, Y, n)` the bracket coefficients in
//! [`FrameData`] determine three scalars `c2, P, E` such that, in the metric
//! stretched by `a` along `n`,
//!
//! ```text
//! K(a)   = -3/4 c2 a + P - E/a
//! K_e(a) = E/a
//! K_G(a) = -3/4 c2 a + P
//! ```
//!
//! The a-derivative terms cancel in the connection computation, so these hold
//! pointwise for a non-constant stretch field as well.

use crate::error::{Error, Result};
use crate::expr::{Point, ScalarExpr, Tape};
use crate::fields::{lie_bracket, Frame, MetricField};

/// Signs `(s1, s2)` of the `X<[X,Y],Y>` and `Y<[X,Y],X>` terms of `P`,
/// calibrated against the curvature oracle.
pub const P_SIGNS: (f64, f64) = (1.0, -1.0);

/// The four sign conventions tried during calibration.
pub const SIGN_CANDIDATES: [(f64, f64); 4] = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)];

/// Bracket coefficients of an orthonormal frame at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FrameData {
    /// `<[X,Y], n>`
    pub c: f64,
    pub bxy_x: f64,
    pub bxy_y: f64,
    pub bxn_x: f64,
    pub bxn_y: f64,
    pub byn_x: f64,
    pub byn_y: f64,
    /// `X <[X,Y], Y>`
    pub dx: f64,
    /// `Y <[X,Y], X>`
    pub dy: f64,
}

impl FrameData {
    /// Coefficients of the orthonormal frame `(X/l, l Y, n)` of the metric
    /// stretched by `l^2` along `X` and `1/l^2` along `Y`. Valid for constant `l`.
    pub fn anisotropic(&self, l: f64) -> FrameData {
        let l2 = l * l;
        FrameData {
            c: self.c,
            bxy_x: l * self.bxy_x,
            bxy_y: self.bxy_y / l,
            bxn_x: self.bxn_x,
            bxn_y: self.bxn_y / l2,
            byn_x: l2 * self.byn_x,
            byn_y: self.byn_y,
            dx: self.dx / l2,
            dy: l2 * self.dy,
        }
    }

    /// The `su(2)` frame with `[X,Y] = 2n`, `[Y,n] = 2X`, `[n,X] = 2Y` and the
    /// bi-invariant metric.
    pub fn su2() -> FrameData {
        FrameData { c: 2.0, bxn_y: -2.0, byn_x: 2.0, ..FrameData::default() }
    }

    pub fn is_finite(&self) -> bool {
        [self.c, self.bxy_x, self.bxy_y, self.bxn_x, self.bxn_y, self.byn_x, self.byn_y, self.dx, self.dy]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// `c2`, `P` and `E` at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StretchCoefficients {
    pub c2: f64,
    pub p: f64,
    pub e: f64,
}

pub fn stretch_coefficients(fd: &FrameData) -> StretchCoefficients {
    stretch_coefficients_with_signs(fd, P_SIGNS)
}

pub fn stretch_coefficients_with_signs(fd: &FrameData, signs: (f64, f64)) -> StretchCoefficients {
    let sum = fd.bxn_y + fd.byn_x;
    StretchCoefficients {
        c2: fd.c * fd.c,
        p: signs.0 * fd.dx + signs.1 * fd.dy - fd.bxy_x * fd.bxy_x - fd.bxy_y * fd.bxy_y
            + 0.5 * fd.c * (fd.byn_x - fd.bxn_y),
        e: fd.bxn_x * fd.byn_y - 0.25 * sum * sum,
    }
}

fn positive(a: f64) -> Result<()> {
    if a > 0.0 && a.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("stretch factor must be positive, got {a}")))
    }
}

pub fn k_sectional_formula(sc: &StretchCoefficients, a: f64) -> Result<f64> {
    positive(a)?;
    Ok(-0.75 * sc.c2 * a + sc.p - sc.e / a)
}

pub fn k_extrinsic_formula(sc: &StretchCoefficients, a: f64) -> Result<f64> {
    positive(a)?;
    Ok(sc.e / a)
}

pub fn k_gaussian_formula(sc: &StretchCoefficients, a: f64) -> Result<f64> {
    positive(a)?;
    Ok(-0.75 * sc.c2 * a + sc.p)
}

/// The nine frame coefficients as closed-form scalar fields.
#[derive(Debug, Clone)]
pub struct FrameDataFields {
    pub c: ScalarExpr,
    pub bxy_x: ScalarExpr,
    pub bxy_y: ScalarExpr,
    pub bxn_x: ScalarExpr,
    pub bxn_y: ScalarExpr,
    pub byn_x: ScalarExpr,
    pub byn_y: ScalarExpr,
    pub dx: ScalarExpr,
    pub dy: ScalarExpr,
}

/// `c2`, `P` and `E` as closed-form scalar fields.
#[derive(Debug, Clone)]
pub struct StretchFields {
    pub c2: ScalarExpr,
    pub p: ScalarExpr,
    pub e: ScalarExpr,
}

impl FrameDataFields {
    /// Brackets are taken symbolically and paired with the frame in `g`; the
    /// frame is assumed orthonormal in `g` (checked when evaluating).
    pub fn new(g: &MetricField, frame: &Frame) -> Self {
        let (x, y, n) = (&frame.x, &frame.y, &frame.n);
        let xy = lie_bracket(x, y);
        let xn = lie_bracket(x, n);
        let yn = lie_bracket(y, n);
        let bxy_x = g.pair(&xy, x);
        let bxy_y = g.pair(&xy, y);
        FrameDataFields {
            c: g.pair(&xy, n),
            dx: x.apply(&bxy_y),
            dy: y.apply(&bxy_x),
            bxy_x,
            bxy_y,
            bxn_x: g.pair(&xn, x),
            bxn_y: g.pair(&xn, y),
            byn_x: g.pair(&yn, x),
            byn_y: g.pair(&yn, y),
        }
    }

    pub fn to_array(&self) -> [ScalarExpr; 9] {
        [
            self.c.clone(),
            self.bxy_x.clone(),
            self.bxy_y.clone(),
            self.bxn_x.clone(),
            self.bxn_y.clone(),
            self.byn_x.clone(),
            self.byn_y.clone(),
            self.dx.clone(),
            self.dy.clone(),
        ]
    }

    pub fn compile(&self) -> Tape {
        Tape::compile(&self.to_array())
    }

    pub fn coefficients(&self) -> StretchFields {
        let (s1, s2) = P_SIGNS;
        let sum = self.bxn_y.add(&self.byn_x);
        let p = self
            .dx
            .scale(s1)
            .add(&self.dy.scale(s2))
            .sub(&self.bxy_x.square())
            .sub(&self.bxy_y.square())
            .add(&self.c.mul(&self.byn_x.sub(&self.bxn_y)).scale(0.5));
        StretchFields { c2: self.c.square(), p, e: self.bxn_x.mul(&self.byn_y).sub(&sum.square().scale(0.25)) }
    }
}

pub(crate) fn unpack_frame_data(v: &[f64]) -> FrameData {
    FrameData {
        c: v[0],
        bxy_x: v[1],
        bxy_y: v[2],
        bxn_x: v[3],
        bxn_y: v[4],
        byn_x: v[5],
        byn_y: v[6],
        dx: v[7],
        dy: v[8],
    }
}

/// Frame coefficients at `p`. The frame must be orthonormal in `g` there.
pub fn extract_frame_data(g: &MetricField, frame: &Frame, p: &Point) -> Result<FrameData> {
    frame.require_orthonormal(g, p)?;
    let tape = FrameDataFields::new(g, frame).compile();
    let v = tape.eval(p).map_err(crate::error::at(p))?;
    Ok(unpack_frame_data(&v))
}

/// Frame coefficients at many points, sharing one compiled tape. Every
/// point is checked for orthonormality.
pub fn extract_frame_data_at(g: &MetricField, frame: &Frame, points: &[Point]) -> Result<Vec<FrameData>> {
    use rayon::prelude::*;
    let tape = FrameDataFields::new(g, frame).compile();
    points
        .par_iter()
        .map(|p| {
            frame.require_orthonormal(g, p)?;
            let v = tape.eval(p).map_err(crate::error::at(p))?;
            Ok(unpack_frame_data(&v))
        })
        .collect()
}

/// `g + (a - 1) nu' (x) nu'` with `nu = n / |n|_g` and `nu' = g(nu, .)`, so
/// that `|n|^2` is multiplied by `a` and the g-orthogonal complement of `n`
/// is untouched.
pub fn stretch_metric(g: &MetricField, n: &crate::fields::VectorField, a: &ScalarExpr) -> MetricField {
    let flat = g.lower(n.comps());
    let norm2 = g.pair(n, n);
    g.rank_one_update(&flat, &a.sub(&ScalarExpr::one()).div(&norm2))
}

/// [`stretch_metric`] for a normal already known to be unit, which skips the
/// symbolic normalization.
pub fn stretch_metric_unit(g: &MetricField, n: &crate::fields::VectorField, a: &ScalarExpr) -> MetricField {
    let flat = g.lower(n.comps());
    g.rank_one_update(&flat, &a.sub(&ScalarExpr::one()))
}

/// `g + (l^2 - 1) X' (x) X' + (l^-2 - 1) Y' (x) Y'` for an orthonormal frame,
/// which makes `|X| = l`, `|Y| = 1/l` and leaves `n` alone.
pub fn anisotropic_stretch(g: &MetricField, frame: &Frame, l: f64) -> Result<MetricField> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::InvalidParameter(format!("anisotropic factor must be positive, got {l}")));
    }
    let xf = g.lower(frame.x.comps());
    let yf = g.lower(frame.y.comps());
    Ok(g.rank_one_update(&xf, &ScalarExpr::num(l * l - 1.0))
        .rank_one_update(&yf, &ScalarExpr::num(1.0 / (l * l) - 1.0)))
}

/// Orthonormal frame of [`anisotropic_stretch`]`(g, frame, l)`.
pub fn anisotropic_frame(frame: &Frame, l: f64) -> Frame {
    frame.scaled(1.0 / l, l, 1.0)
}

/// Largest change of `(c2, P, E)` at `p` when `(X, Y)` is rotated by `theta`
/// or when `X` and `Y` are swapped.
pub fn frame_rotation_check(g: &MetricField, frame: &Frame, p: &Point, theta: &ScalarExpr) -> Result<f64> {
    let base = stretch_coefficients(&extract_frame_data(g, frame, p)?);
    let mut worst: f64 = 0.0;
    for other in [frame.rotated(theta), frame.swapped()] {
        let sc = stretch_coefficients(&extract_frame_data(g, &other, p)?);
        worst = worst.max((sc.c2 - base.c2).abs()).max((sc.p - base.p).abs()).max((sc.e - base.e).abs());
    }
    Ok(worst)
}

/// [`frame_rotation_check`] at many points, compiling each frame once.
pub fn frame_rotation_deviations(
    g: &MetricField,
    frame: &Frame,
    points: &[Point],
    theta: &ScalarExpr,
) -> Result<Vec<f64>> {
    use rayon::prelude::*;
    let frames = [frame.clone(), frame.rotated(theta), frame.swapped()];
    let data: Vec<Vec<FrameData>> =
        frames.iter().map(|f| extract_frame_data_at(g, f, points)).collect::<Result<_>>()?;
    Ok((0..points.len())
        .into_par_iter()
        .map(|i| {
            let base = stretch_coefficients(&data[0][i]);
            data[1..].iter().fold(0.0f64, |worst, d| {
                let sc = stretch_coefficients(&d[i]);
                worst.max((sc.c2 - base.c2).abs()).max((sc.p - base.p).abs()).max((sc.e - base.e).abs())
            })
        })
        .collect())
}
