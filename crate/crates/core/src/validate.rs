//! Formula-versus-oracle comparisons shared by the test suites and the CLI.

use rayon::prelude::*;

use crate::error::{at, Result};
use crate::expr::{parse_expr, Axis, Point, ScalarExpr, Tape};
use crate::fields::{gram_schmidt_adapted, Chart, Distribution, Frame, GridSpec, MetricField};
use crate::framecalc::{
    frame_rotation_deviations, k_extrinsic_formula, k_gaussian_formula, k_sectional_formula,
    stretch_coefficients_with_signs, stretch_metric_unit, unpack_frame_data, FrameDataFields, P_SIGNS, SIGN_CANDIDATES,
};
use crate::models::{builtin, BUILTINS};
use crate::riemann::plane_field_curvatures;

/// Worst deviation of one curvature over a point set.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Deviation {
    /// Largest `|formula - oracle| / (1 + |oracle|)`.
    pub max: f64,
    pub point: Point,
    pub formula: f64,
    pub oracle: f64,
}

impl Default for Deviation {
    fn default() -> Self {
        Deviation { max: 0.0, point: Point::default(), formula: 0.0, oracle: 0.0 }
    }
}

impl Deviation {
    fn record(&mut self, p: &Point, formula: f64, oracle: f64) {
        let d = (formula - oracle).abs() / (1.0 + oracle.abs());
        if d > self.max || d.is_nan() {
            *self = Deviation { max: d, point: *p, formula, oracle };
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize)]
pub struct FormulaDeviations {
    pub k: Deviation,
    pub k_e: Deviation,
    pub k_g: Deviation,
}

/// Compares the closed forms for `K`, `K_e`, `K_G` in `g` stretched by `a`
/// along `frame.n` against the oracle, at every point. The frame must be
/// orthonormal in `g`.
pub fn formula_deviations(
    g: &MetricField,
    frame: &Frame,
    a: &ScalarExpr,
    points: &[Point],
    signs: (f64, f64),
) -> Result<FormulaDeviations> {
    let tape = Tape::compile(&[FrameDataFields::new(g, frame).to_array().to_vec(), vec![a.clone()]].concat());
    let stretched = stretch_metric_unit(g, &frame.n, a);
    let plane = Distribution::Span(frame.x.clone(), frame.y.clone());
    let oracle = plane_field_curvatures(&stretched, &plane, points)?;
    let formulas: Vec<(f64, f64, f64)> = points
        .par_iter()
        .map(|p| {
            frame.require_orthonormal(g, p)?;
            let v = tape.eval(p).map_err(at(p))?;
            let sc = stretch_coefficients_with_signs(&unpack_frame_data(&v), signs);
            let a = v[9];
            Ok((k_sectional_formula(&sc, a)?, k_extrinsic_formula(&sc, a)?, k_gaussian_formula(&sc, a)?))
        })
        .collect::<Result<_>>()?;
    let mut out = FormulaDeviations::default();
    for ((p, f), o) in points.iter().zip(formulas).zip(oracle) {
        out.k.record(p, f.0, o.k);
        out.k_e.record(p, f.1, o.k_e);
        out.k_g.record(p, f.2, o.k_g);
    }
    Ok(out)
}

/// Largest `|symbolic - central difference| / (1 + |symbolic|)` over the
/// first partials of `exprs` at `points`.
pub fn fd_deviation(exprs: &[ScalarExpr], points: &[Point], h: f64) -> Result<f64> {
    let mut d = crate::expr::Differentiator::new();
    let values = Tape::compile(exprs);
    let partials: Vec<Tape> = Axis::ALL
        .iter()
        .map(|&axis| Tape::compile(&exprs.iter().map(|e| d.derive(e, axis)).collect::<Vec<_>>()))
        .collect();
    let worst = points
        .par_iter()
        .map(|p| {
            let mut worst: f64 = 0.0;
            for (k, tape) in partials.iter().enumerate() {
                let (mut fwd, mut bwd) = (*p, *p);
                fwd.0[k] += h;
                bwd.0[k] -= h;
                let s = tape.eval(p).map_err(at(p))?;
                let a = values.eval(&fwd).map_err(at(&fwd))?;
                let b = values.eval(&bwd).map_err(at(&bwd))?;
                for i in 0..exprs.len() {
                    let c = (a[i] - b[i]) / (2.0 * h);
                    worst = worst.max((s[i] - c).abs() / (1.0 + s[i].abs()));
                }
            }
            Ok(worst)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(worst.into_iter().fold(0.0, f64::max))
}

// ---------------------------------------------------------------------------
// suites over the built-in chart models

/// One orthonormal frame to test against, with the metric it is
/// orthonormal in.
#[derive(Debug, Clone)]
pub struct Case {
    pub model: String,
    /// Distribution or frame name, e.g. `xi` or `frame:bicontact`.
    pub label: String,
    pub chart: Chart,
    pub metric: MetricField,
    pub frame: Frame,
}

/// Adapted frames of every named distribution of every chart built-in, plus
/// every named frame, in the model metric when it is orthonormal there and in
/// the metric it induces otherwise.
pub fn builtin_cases() -> Result<Vec<Case>> {
    let grid = GridSpec::uniform(8);
    let mut out = Vec::new();
    for (name, _) in BUILTINS {
        let model = builtin(name)?;
        let Some(geo) = &model.geometry else { continue };
        let points = geo.chart.grid(&grid);
        for dist in geo.distributions.keys() {
            let frame = gram_schmidt_adapted(&geo.metric, &geo.distribution(dist)?, &points)?;
            out.push(Case {
                model: name.into(),
                label: dist.clone(),
                chart: geo.chart.clone(),
                metric: geo.metric.clone(),
                frame,
            });
        }
        for (fname, frame) in &geo.frames {
            let orthonormal =
                points.iter().all(|p| frame.orthonormality_deviation(&geo.metric, p).is_ok_and(|d| d <= 1e-10));
            let metric = if orthonormal { geo.metric.clone() } else { MetricField::from_orthonormal_frame(frame) };
            out.push(Case {
                model: name.into(),
                label: format!("frame:{fname}"),
                chart: geo.chart.clone(),
                metric,
                frame: frame.clone(),
            });
        }
    }
    Ok(out)
}

/// Stretch fields used by the formula suites.
pub const STRETCHES: [&str; 4] = ["0.3", "1", "2.7", "2 + sin(u3)"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    SectionalFormula,
    ExtrinsicFormula,
    GaussianFormula,
    FrameInvariance,
    Fd,
    SignCalibration,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::SectionalFormula,
        Suite::ExtrinsicFormula,
        Suite::GaussianFormula,
        Suite::FrameInvariance,
        Suite::Fd,
        Suite::SignCalibration,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::SectionalFormula => "lemma31",
            Suite::ExtrinsicFormula => "lemma32",
            Suite::GaussianFormula => "lemma33",
            Suite::FrameInvariance => "frame-invariance",
            Suite::Fd => "fd",
            Suite::SignCalibration => "sign-calibration",
        }
    }

    pub fn from_name(s: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|x| x.name() == s)
    }

    pub fn default_tolerance(self) -> f64 {
        match self {
            Suite::SectionalFormula | Suite::ExtrinsicFormula | Suite::GaussianFormula | Suite::SignCalibration => 1e-6,
            Suite::FrameInvariance => 1e-8,
            Suite::Fd => 1e-4,
        }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SuiteRow {
    pub model: String,
    pub case: String,
    /// Stretch field, rotation angle or sign pair, depending on the suite.
    pub detail: String,
    pub max: f64,
    pub point: Point,
    pub passed: bool,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub tolerance: f64,
    pub samples: usize,
    pub seed: u64,
    pub rows: Vec<SuiteRow>,
    pub passed: bool,
    /// Sign pairs passing on every case (sign-calibration only).
    pub passing_signs: Vec<(f64, f64)>,
}

impl SuiteReport {
    pub fn worst(&self) -> Option<&SuiteRow> {
        self.rows.iter().max_by(|a, b| a.max.total_cmp(&b.max))
    }
}

fn row(case: &Case, detail: String, max: f64, point: Point, tol: f64) -> SuiteRow {
    SuiteRow { model: case.model.clone(), case: case.label.clone(), detail, max, point, passed: max <= tol }
}

/// Runs `suite` on the built-in chart models at `samples` random points per
/// case, drawn with `seed`.
pub fn run_suite(suite: Suite, samples: usize, seed: u64, tol: f64) -> Result<SuiteReport> {
    let cases = builtin_cases()?;
    let mut rows = Vec::new();
    let mut passing_signs = Vec::new();
    match suite {
        Suite::SectionalFormula | Suite::ExtrinsicFormula | Suite::GaussianFormula => {
            for case in &cases {
                let points = case.chart.sample(samples, seed);
                for a in STRETCHES {
                    let d = formula_deviations(&case.metric, &case.frame, &parse_expr(a)?, &points, P_SIGNS)?;
                    let dev = match suite {
                        Suite::SectionalFormula => d.k,
                        Suite::ExtrinsicFormula => d.k_e,
                        _ => d.k_g,
                    };
                    rows.push(row(case, format!("a = {a}"), dev.max, dev.point, tol));
                }
            }
        }
        Suite::SignCalibration => {
            let one = ScalarExpr::one();
            for signs in SIGN_CANDIDATES {
                let mut all = true;
                for case in &cases {
                    let points = case.chart.sample(samples, seed);
                    let d = formula_deviations(&case.metric, &case.frame, &one, &points, signs)?;
                    let r = row(case, format!("signs ({:+}, {:+})", signs.0, signs.1), d.k.max, d.k.point, tol);
                    all &= r.passed;
                    rows.push(r);
                }
                if all {
                    passing_signs.push(signs);
                }
            }
        }
        Suite::FrameInvariance => {
            for case in &cases {
                let points = case.chart.sample(samples, seed);
                for theta in ["pi/3", "u1 + u2*u3"] {
                    let theta_e = parse_expr(theta)?;
                    let devs = frame_rotation_deviations(&case.metric, &case.frame, &points, &theta_e)?;
                    let (i, max) = devs
                        .iter()
                        .copied()
                        .enumerate()
                        .fold((0, 0.0f64), |b, (i, v)| if v > b.1 { (i, v) } else { b });
                    rows.push(row(case, format!("theta = {theta}, and X <-> Y"), max, points[i], tol));
                }
            }
        }
        Suite::Fd => {
            for case in &cases {
                let points = case.chart.sample(samples.min(50), seed);
                let mut exprs: Vec<ScalarExpr> = case.metric.entries().to_vec();
                for m in case.frame.members() {
                    exprs.extend(m.comps().iter().cloned());
                }
                exprs.extend(FrameDataFields::new(&case.metric, &case.frame).to_array());
                let max = fd_deviation(&exprs, &points, 1e-5)?;
                rows.push(row(case, "metric, frame and bracket coefficients".into(), max, points[0], tol));
            }
        }
    }
    let passed = match suite {
        Suite::SignCalibration => passing_signs.len() == 1,
        _ => rows.iter().all(|r| r.passed),
    };
    Ok(SuiteReport { suite, tolerance: tol, samples, seed, rows, passed, passing_signs })
}
