//! Constructing a metric in which a plane field has a prescribed curvature.
//!
//! Every pipeline builds a closed-form stretch field `a`, a final metric,
//! and then measures the result with the curvature oracle before reporting
//! success.

use rayon::prelude::*;

use crate::error::{at, Error, Result};
use crate::expr::{Point, ScalarExpr, Tape};
use crate::fields::{
    check_transverse_pair, gram_schmidt_adapted, Chart, Distribution, Frame, GridSpec, MetricField, CONTACT_MARGIN,
};
use crate::framecalc::{
    anisotropic_frame, anisotropic_stretch, stretch_coefficients, stretch_metric_unit, unpack_frame_data, FrameData,
    FrameDataFields, StretchCoefficients, StretchFields,
};
use crate::riemann::plane_field_curvatures;

/// Largest exponent of the doubling schedule for `D`.
pub const MAX_D_EXPONENT: u32 = 60;
/// Largest `k` in the schedule `2^{±k/2}` for the anisotropic factor.
pub const MAX_LAMBDA_STEP: u32 = 60;
/// Bracket terms below this count as vanishing in the anisotropic search.
pub const BRACKET_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Margins {
    /// Relative discriminant margin of the pointwise solve.
    pub delta_disc: f64,
    /// Required negativity of the extrinsic coefficient after anisotropic stretching.
    pub delta_neg: f64,
}

impl Default for Margins {
    fn default() -> Self {
        Margins { delta_disc: 0.1, delta_neg: 1e-3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Sectional curvature, negative target, global scale search.
    Sectional,
    /// Sectional curvature, any target, bi-contact frame.
    SectionalBicontact,
    /// Gaussian curvature of the plane field, negative target.
    Gaussian,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Sectional => "sectional",
            Method::SectionalBicontact => "sectional-bicontact",
            Method::Gaussian => "gaussian",
        }
    }

    pub fn from_name(s: &str) -> Option<Method> {
        match s {
            "sectional" => Some(Method::Sectional),
            "sectional-bicontact" | "sectional_bicontact" => Some(Method::SectionalBicontact),
            "gaussian" => Some(Method::Gaussian),
            _ => None,
        }
    }
}

/// Everything a pipeline needs, already resolved from a model.
#[derive(Debug, Clone)]
pub struct PrescriptionProblem {
    /// Free-form description, e.g. `model/distribution`.
    pub label: String,
    pub chart: Chart,
    pub metric: MetricField,
    pub distribution: Distribution,
    /// Second plane field of a bi-contact pair, checked when present.
    pub eta: Option<Distribution>,
    /// Adapted frame `(X, Y, n)`; required by the bi-contact method, where
    /// `X` spans the intersection of the two planes, `Y` lies in the first
    /// and `n` in the second. Other methods build one by Gram-Schmidt.
    pub frame: Option<Frame>,
    pub target: ScalarExpr,
    pub method: Method,
    pub grid: GridSpec,
    pub margins: Margins,
    /// Largest accepted `|measured - target|` on the grid.
    pub tolerance: f64,
}

impl PrescriptionProblem {
    pub fn new(
        label: impl Into<String>,
        chart: Chart,
        metric: MetricField,
        distribution: Distribution,
        target: ScalarExpr,
        method: Method,
    ) -> Self {
        PrescriptionProblem {
            label: label.into(),
            chart,
            metric,
            distribution,
            eta: None,
            frame: None,
            target,
            method,
            grid: GridSpec::default(),
            margins: Margins::default(),
            tolerance: 1e-4,
        }
    }

    /// The user grid followed by its refinement.
    fn search_points(&self) -> Vec<Point> {
        let mut pts = self.chart.grid(&self.grid);
        pts.extend(self.chart.grid(&self.grid.refined()));
        pts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Residual {
    pub max: f64,
    pub mean: f64,
    pub point: Point,
    pub measured: f64,
    pub target: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct PrescriptionResult {
    pub method: Method,
    /// Stretch field along the unit normal.
    pub a: ScalarExpr,
    pub d0: f64,
    pub lambda: f64,
    pub rho: f64,
    #[serde(skip)]
    pub g_final: MetricField,
    #[serde(skip)]
    pub frame: Frame,
    /// Which metric the pipeline started from: `model` or `frame`.
    pub base_metric: &'static str,
    pub residual: Residual,
}

// ---------------------------------------------------------------------------
// pointwise solves

/// The larger root of `-3/4 c2 a^2 + (P - t) a - E = 0`.
pub fn solve_pointwise_quadratic(c2: f64, p: f64, e: f64, t: f64) -> Result<f64> {
    if !(c2 > 0.0) {
        return Err(Error::InvalidParameter(format!("quadratic solve needs c2 > 0, got {c2}")));
    }
    let b = p - t;
    let disc = b * b - 3.0 * c2 * e;
    if !(disc >= 0.0) {
        return Err(Error::NoPositiveRoot { point: None, detail: format!("discriminant {disc:.6e} < 0") });
    }
    let sq = disc.sqrt();
    // avoid cancellation: when b < 0 use the product of the roots
    let a = if b >= 0.0 { (b + sq) / (1.5 * c2) } else { 2.0 * e / (b - sq) };
    if a > 0.0 && a.is_finite() {
        Ok(a)
    } else {
        Err(Error::NoPositiveRoot { point: None, detail: format!("largest root {a:.6e} is not positive") })
    }
}

/// `a = (P - t) / (3/4 c2)`.
pub fn solve_pointwise_linear(c2: f64, p: f64, t: f64) -> Result<f64> {
    if !(c2 > 0.0) {
        return Err(Error::InvalidParameter(format!("linear solve needs c2 > 0, got {c2}")));
    }
    let a = (p - t) / (0.75 * c2);
    if a > 0.0 && a.is_finite() {
        Ok(a)
    } else {
        Err(Error::NonpositiveSolution { point: None, detail: format!("P - t = {:.6e} gives a = {a:.6e}", p - t) })
    }
}

fn with_point(e: Error, p: &Point) -> Error {
    match e {
        Error::NoPositiveRoot { detail, .. } => Error::NoPositiveRoot { point: Some(*p), detail },
        Error::NonpositiveSolution { detail, .. } => Error::NonpositiveSolution { point: Some(*p), detail },
        other => other,
    }
}

/// Coefficients and target value at one grid point.
#[derive(Debug, Clone, Copy)]
pub struct Sample {
    pub point: Point,
    pub sc: StretchCoefficients,
    pub f: f64,
}

/// Whether the quadratic solve at `s` with target `f * d` succeeds with the
/// relative discriminant margin `delta`.
pub fn quadratic_margin_ok(s: &Sample, d: f64, delta: f64) -> bool {
    let b = s.sc.p - s.f * d;
    let disc = b * b - 3.0 * s.sc.c2 * s.sc.e;
    disc >= delta * (b * b + 3.0 * s.sc.c2 * s.sc.e.abs())
        && solve_pointwise_quadratic(s.sc.c2, s.sc.p, s.sc.e, s.f * d).is_ok()
}

/// Linear counterpart of [`quadratic_margin_ok`].
pub fn linear_margin_ok(s: &Sample, d: f64, delta: f64) -> bool {
    let t = s.f * d;
    s.sc.p - t >= delta * (s.sc.p.abs() + t.abs()) && solve_pointwise_linear(s.sc.c2, s.sc.p, t).is_ok()
}

fn require_contact(samples: &[Sample]) -> Result<()> {
    let worst = samples
        .iter()
        .min_by(|a, b| a.sc.c2.total_cmp(&b.sc.c2))
        .ok_or_else(|| Error::InvalidParameter("empty grid".into()))?;
    let min_abs = worst.sc.c2.sqrt();
    if !(min_abs >= CONTACT_MARGIN) {
        return Err(Error::NotContact { min_abs, point: worst.point });
    }
    Ok(())
}

fn find_scale(samples: &[Sample], ok: impl Fn(&Sample, f64) -> bool + Sync) -> Result<f64> {
    require_contact(samples)?;
    let mut d = 1.0;
    for _ in 0..=MAX_D_EXPONENT {
        if samples.par_iter().all(|s| ok(s, d)) {
            return Ok(d);
        }
        d *= 2.0;
    }
    Err(Error::ScheduleExhausted { last: d / 2.0 })
}

/// Smallest `D` in `1, 2, 4, ...` for which the quadratic with target
/// `f D` has a positive root with discriminant margin at every sample.
pub fn find_d(samples: &[Sample], margins: &Margins) -> Result<f64> {
    find_scale(samples, |s, d| quadratic_margin_ok(s, d, margins.delta_disc))
}

/// As [`find_d`], for the linear equation of the Gaussian method, with the
/// margin `P - t >= delta (|P| + |t|)`.
pub fn find_d_linear(samples: &[Sample], margins: &Margins) -> Result<f64> {
    find_scale(samples, |s, d| linear_margin_ok(s, d, margins.delta_disc))
}

/// Outcome of the anisotropic search.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LambdaSearch {
    pub lambda: f64,
    /// Largest extrinsic coefficient over the samples at `lambda`.
    pub max_e: f64,
}

/// The first factor of `2^{1/2}, 2^{-1/2}, 2, 1/2, ...` whose anisotropic
/// stretch makes the extrinsic coefficient at most `-delta_neg` everywhere.
pub fn find_lambda(samples: &[FrameData], margins: &Margins) -> Result<LambdaSearch> {
    let min_abs = |f: fn(&FrameData) -> f64| samples.iter().map(|d| f(d).abs()).fold(f64::INFINITY, f64::min);
    if samples.is_empty() {
        return Err(Error::InvalidParameter("empty grid".into()));
    }
    if min_abs(|d| d.bxn_y) < BRACKET_FLOOR && min_abs(|d| d.byn_x) < BRACKET_FLOOR {
        return Err(Error::NotApplicable(
            "neither <[X,n],Y> nor <[Y,n],X> stays away from zero, so no anisotropic stretch makes the extrinsic curvature negative".into(),
        ));
    }
    let mut last = 1.0;
    for k in 1..=MAX_LAMBDA_STEP {
        for sign in [1.0, -1.0] {
            let lambda = 2f64.powf(sign * k as f64 / 2.0);
            last = lambda;
            let max_e = samples
                .par_iter()
                .map(|d| stretch_coefficients(&d.anisotropic(lambda)).e)
                .reduce(|| f64::NEG_INFINITY, f64::max);
            if max_e <= -margins.delta_neg {
                return Ok(LambdaSearch { lambda, max_e });
            }
        }
    }
    Err(Error::ScheduleExhausted { last })
}

/// `rho * g`.
pub fn rescale_metric(g: &MetricField, rho: f64) -> Result<MetricField> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidParameter(format!("rescale factor must be positive, got {rho}")));
    }
    Ok(g.scaled(rho))
}

// ---------------------------------------------------------------------------
// closed-form stretch fields

/// `((P - t) + sqrt((P - t)^2 - 3 c2 E)) / (3/2 c2)`.
pub fn quadratic_root_field(sf: &StretchFields, t: &ScalarExpr) -> ScalarExpr {
    let b = sf.p.sub(t);
    let disc = b.square().sub(&sf.c2.mul(&sf.e).scale(3.0));
    b.add(&disc.sqrt()).div(&sf.c2.scale(1.5))
}

/// `(P - t) / (3/4 c2)`.
pub fn linear_root_field(sf: &StretchFields, t: &ScalarExpr) -> ScalarExpr {
    sf.p.sub(t).div(&sf.c2.scale(0.75))
}

/// Stretch coefficients, target values and raw frame coefficients at
/// `points`.
pub fn sample_coefficients(
    fields: &FrameDataFields,
    target: &ScalarExpr,
    points: &[Point],
) -> Result<(Vec<Sample>, Vec<FrameData>)> {
    let tape = Tape::compile(&[fields.to_array().to_vec(), vec![target.clone()]].concat());
    let rows: Vec<(Sample, FrameData)> = points
        .par_iter()
        .map(|p| {
            let v = tape.eval(p).map_err(at(p))?;
            let fd = unpack_frame_data(&v);
            if !fd.is_finite() {
                return Err(Error::Degenerate { what: "frame coefficients (not finite)".into(), point: *p });
            }
            Ok((Sample { point: *p, sc: stretch_coefficients(&fd), f: v[9] }, fd))
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().unzip())
}

fn require_negative_target(problem: &PrescriptionProblem, points: &[Point]) -> Result<()> {
    let tape = Tape::compile(std::slice::from_ref(&problem.target));
    for p in points {
        let f = tape.eval(p).map_err(at(p))?[0];
        if !(f < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "method {} needs a strictly negative target, but f = {f} at {p}",
                problem.method.name()
            )));
        }
    }
    Ok(())
}

fn require_positive(a: &ScalarExpr, points: &[Point]) -> Result<()> {
    let tape = Tape::compile(std::slice::from_ref(a));
    for p in points {
        let v = tape.eval(p).map_err(at(p))?[0];
        if !(v > 0.0) {
            return Err(Error::NoPositiveRoot { point: Some(*p), detail: format!("stretch field evaluates to {v}") });
        }
    }
    Ok(())
}

/// Solves pointwise at every sample so failures surface with their point.
fn check_pointwise(samples: &[Sample], d: f64, linear: bool) -> Result<()> {
    samples.par_iter().try_for_each(|s| {
        let r = if linear {
            solve_pointwise_linear(s.sc.c2, s.sc.p, s.f * d)
        } else {
            solve_pointwise_quadratic(s.sc.c2, s.sc.p, s.sc.e, s.f * d)
        };
        r.map(|_| ()).map_err(|e| with_point(e, &s.point))
    })
}

fn adapted_frame(problem: &PrescriptionProblem, points: &[Point]) -> Result<Frame> {
    match &problem.frame {
        Some(f) => Ok(f.clone()),
        None => gram_schmidt_adapted(&problem.metric, &problem.distribution, points),
    }
}

// ---------------------------------------------------------------------------
// pipelines

pub fn prescribe(problem: &PrescriptionProblem) -> Result<PrescriptionResult> {
    match problem.method {
        Method::Sectional => prescribe_sectional(problem),
        Method::SectionalBicontact => prescribe_sectional_bicontact(problem),
        Method::Gaussian => prescribe_gaussian(problem),
    }
}

fn prescribe_scaled(problem: &PrescriptionProblem, linear: bool) -> Result<PrescriptionResult> {
    let points = problem.search_points();
    require_negative_target(problem, &points)?;
    let g = &problem.metric;
    g.check_positive_definite(&points)?;
    let frame = adapted_frame(problem, &points)?;
    let fields = FrameDataFields::new(g, &frame);
    let (samples, _) = sample_coefficients(&fields, &problem.target, &points)?;
    let d0 = if linear { find_d_linear(&samples, &problem.margins)? } else { find_d(&samples, &problem.margins)? };
    check_pointwise(&samples, d0, linear)?;
    let sf = fields.coefficients();
    let t = problem.target.scale(d0);
    let a = if linear { linear_root_field(&sf, &t) } else { quadratic_root_field(&sf, &t) };
    require_positive(&a, &points)?;
    let g_final = rescale_metric(&stretch_metric_unit(g, &frame.n, &a), d0)?;
    finish(problem, a, d0, 1.0, d0, g_final, frame, "model")
}

/// Metric in which the sectional curvature of the plane field equals a
/// negative target: stretch with target `f D0`, then scale by `D0`.
pub fn prescribe_sectional(problem: &PrescriptionProblem) -> Result<PrescriptionResult> {
    prescribe_scaled(problem, false)
}

/// Metric in which the Gaussian curvature `K + K_e` equals a negative target.
pub fn prescribe_gaussian(problem: &PrescriptionProblem) -> Result<PrescriptionResult> {
    prescribe_scaled(problem, true)
}

/// Sectional curvature equal to an arbitrary target, for the first plane of
/// a bi-contact pair: an anisotropic stretch first makes the extrinsic
/// coefficient negative, after which the pointwise quadratic always has a
/// positive root and no rescaling is needed.
pub fn prescribe_sectional_bicontact(problem: &PrescriptionProblem) -> Result<PrescriptionResult> {
    let frame = problem.frame.clone().ok_or_else(|| {
        Error::InvalidParameter(
            "the bi-contact method needs an adapted frame (X in both planes, Y in the first, n in the second)".into(),
        )
    })?;
    let points = problem.search_points();
    if let Some(eta) = &problem.eta {
        let report = check_transverse_pair(&problem.distribution, eta, Some(&problem.metric), &points)?;
        if !report.is_bicontact {
            return Err(Error::NotApplicable(format!(
                "the two plane fields are not a bi-contact pair (min transversality {:.3e}, signs {:?} and {:?})",
                report.min_transversality, report.first.sign, report.second.sign
            )));
        }
    }
    let orthonormal =
        points.iter().all(|p| frame.orthonormality_deviation(&problem.metric, p).is_ok_and(|d| d <= 1e-10));
    let (g, base) = if orthonormal {
        (problem.metric.clone(), "model")
    } else {
        (MetricField::from_orthonormal_frame(&frame), "frame")
    };
    g.check_positive_definite(&points)?;

    let fields = FrameDataFields::new(&g, &frame);
    let (_, data) = sample_coefficients(&fields, &problem.target, &points)?;
    let search = find_lambda(&data, &problem.margins)?;
    let lambda = search.lambda;

    let g_l = anisotropic_stretch(&g, &frame, lambda)?;
    let frame_l = anisotropic_frame(&frame, lambda);
    let fields_l = FrameDataFields::new(&g_l, &frame_l);
    let (samples, _) = sample_coefficients(&fields_l, &problem.target, &points)?;
    require_contact(&samples)?;
    if let Some(s) = samples.iter().find(|s| s.sc.e > -problem.margins.delta_neg) {
        // the closed-form transform and the recomputed frame disagree
        return Err(Error::NoPositiveRoot {
            point: Some(s.point),
            detail: format!("extrinsic coefficient {:.6e} is not negative after the anisotropic stretch", s.sc.e),
        });
    }
    check_pointwise(&samples, 1.0, false)?;
    let a = quadratic_root_field(&fields_l.coefficients(), &problem.target);
    require_positive(&a, &points)?;
    let g_final = stretch_metric_unit(&g_l, &frame_l.n, &a);
    finish(problem, a, 1.0, lambda, 1.0, g_final, frame_l, base)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    problem: &PrescriptionProblem,
    a: ScalarExpr,
    d0: f64,
    lambda: f64,
    rho: f64,
    g_final: MetricField,
    frame: Frame,
    base_metric: &'static str,
) -> Result<PrescriptionResult> {
    let mut result = PrescriptionResult {
        method: problem.method,
        a,
        d0,
        lambda,
        rho,
        g_final,
        frame,
        base_metric,
        residual: Residual { max: 0.0, mean: 0.0, point: Point::default(), measured: 0.0, target: 0.0 },
    };
    let residual = verify_prescription(&result.g_final, problem)?;
    result.residual = residual;
    if !(residual.max <= problem.tolerance) {
        return Err(Error::VerificationFailed {
            max: residual.max,
            tolerance: problem.tolerance,
            point: residual.point,
        });
    }
    Ok(result)
}

/// Measures the curvature targeted by `problem.method` in `g` with the
/// oracle at every point of the problem grid and compares it with the target.
pub fn verify_prescription(g: &MetricField, problem: &PrescriptionProblem) -> Result<Residual> {
    let points = problem.chart.grid(&problem.grid);
    let measured = plane_field_curvatures(g, &problem.distribution, &points)?;
    let target = Tape::compile(std::slice::from_ref(&problem.target));
    let mut out = Residual { max: 0.0, mean: 0.0, point: Point::default(), measured: 0.0, target: 0.0 };
    let mut sum = 0.0;
    for (p, m) in points.iter().zip(&measured) {
        let value = match problem.method {
            Method::Gaussian => m.k_g,
            _ => m.k,
        };
        let f = target.eval(p).map_err(at(p))?[0];
        let r = (value - f).abs();
        sum += r;
        if r > out.max || r.is_nan() {
            out = Residual { max: r, mean: 0.0, point: *p, measured: value, target: f };
        }
    }
    out.mean = sum / points.len().max(1) as f64;
    Ok(out)
}
