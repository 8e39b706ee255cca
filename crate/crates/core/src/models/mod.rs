//! Built-in chart models and the JSON model format.

mod builtin;
mod json;

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::expr::{Point, ScalarExpr};
use crate::fields::{
    cross_num, spanning_pair, Chart, Distribution, Frame, GridSpec, MetricField, OneForm, VectorField,
};
use crate::framecalc::FrameData;

pub use builtin::{builtin, BUILTINS};

/// How a named plane field is given in a model file.
#[derive(Debug, Clone)]
pub enum DistributionDef {
    /// Kernel of the named one-form.
    Kernel(String),
    Span(VectorField, VectorField),
}

/// Geometry on a single coordinate chart.
#[derive(Debug, Clone)]
pub struct ChartModel {
    pub chart: Chart,
    pub metric: MetricField,
    pub one_forms: BTreeMap<String, OneForm>,
    pub distributions: BTreeMap<String, DistributionDef>,
    pub frames: BTreeMap<String, Frame>,
}

#[derive(Debug, Clone)]
pub struct Model {
    pub name: String,
    pub description: String,
    /// Absent for models given only by constant frame coefficients.
    pub geometry: Option<ChartModel>,
    /// Constant frame coefficients of a homogeneous model.
    pub frame_data: Option<FrameData>,
}

impl ChartModel {
    pub fn form(&self, name: &str) -> Result<&OneForm> {
        self.one_forms.get(name).ok_or_else(|| Error::Unknown { kind: "one-form", name: name.into() })
    }

    pub fn distribution(&self, name: &str) -> Result<Distribution> {
        match self.distributions.get(name) {
            Some(DistributionDef::Kernel(form)) => Ok(Distribution::Kernel(self.form(form)?.clone())),
            Some(DistributionDef::Span(s, t)) => Ok(Distribution::Span(s.clone(), t.clone())),
            None => Err(Error::Unknown { kind: "distribution", name: name.into() }),
        }
    }

    pub fn frame(&self, name: &str) -> Result<&Frame> {
        self.frames.get(name).ok_or_else(|| Error::Unknown { kind: "frame", name: name.into() })
    }

    /// Every expression in the model, labelled by where it appears.
    fn expressions(&self) -> Vec<(String, ScalarExpr)> {
        let mut out = Vec::new();
        for (key, e) in crate::fields::METRIC_KEYS.iter().zip(self.metric.entries()) {
            out.push((format!("metric.{key}"), e.clone()));
        }
        let triple = |out: &mut Vec<(String, ScalarExpr)>, label: String, comps: &[ScalarExpr; 3]| {
            for (i, e) in comps.iter().enumerate() {
                out.push((format!("{label}[{i}]"), e.clone()));
            }
        };
        for (name, f) in &self.one_forms {
            triple(&mut out, format!("one_forms.{name}"), f.comps());
        }
        for (name, d) in &self.distributions {
            if let DistributionDef::Span(s, t) = d {
                triple(&mut out, format!("distributions.{name}.span[0]"), s.comps());
                triple(&mut out, format!("distributions.{name}.span[1]"), t.comps());
            }
        }
        for (name, f) in &self.frames {
            triple(&mut out, format!("frames.{name}.X"), f.x.comps());
            triple(&mut out, format!("frames.{name}.Y"), f.y.comps());
            triple(&mut out, format!("frames.{name}.n"), f.n.comps());
        }
        out
    }

    /// Load-time checks on `grid`: metric positive-definite, forms
    /// nonvanishing, plane fields nondegenerate, frames independent, and
    /// expressions periodic along periodic axes.
    pub fn check(&self, grid: &GridSpec) -> Result<()> {
        let points = self.chart.grid(grid);
        self.metric.check_positive_definite(&points)?;
        for (name, form) in &self.one_forms {
            let tape = crate::expr::Tape::compile(form.comps());
            for (p, v) in points.iter().zip(crate::fields::eval_all(&tape, &points)?) {
                if v.iter().all(|c| *c == 0.0) {
                    return Err(Error::Degenerate { what: format!("one-form `{name}` (vanishes)"), point: *p });
                }
            }
        }
        for name in self.distributions.keys() {
            let d = self.distribution(name)?;
            spanning_pair(&d, &points).map_err(|e| rename(e, &format!("distribution `{name}`")))?;
        }
        for (name, frame) in &self.frames {
            for p in &points {
                let [x, y, n] = [frame.x.eval(p)?, frame.y.eval(p)?, frame.n.eval(p)?];
                let c = cross_num(&x, &y);
                let det = c[0] * n[0] + c[1] * n[1] + c[2] * n[2];
                let scale = crate::fields::norm_num(&x) * crate::fields::norm_num(&y) * crate::fields::norm_num(&n);
                if !(det.abs() > 1e-12 * scale) {
                    return Err(Error::Degenerate { what: format!("frame `{name}` (dependent members)"), point: *p });
                }
            }
        }
        self.chart.check_periodic(&self.expressions(), grid, 1e-9)
    }
}

fn rename(e: Error, what: &str) -> Error {
    match e {
        Error::Degenerate { what: inner, point } => Error::Degenerate { what: format!("{what}: {inner}"), point },
        other => other,
    }
}

impl Model {
    pub fn geometry(&self) -> Result<&ChartModel> {
        self.geometry.as_ref().ok_or_else(|| {
            Error::NotApplicable(format!(
                "model `{}` is given by constant frame coefficients and has no chart",
                self.name
            ))
        })
    }

    pub fn check(&self, grid: &GridSpec) -> Result<()> {
        match &self.geometry {
            Some(g) => g.check(grid),
            None => Ok(()),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json::to_json(self)
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Model> {
        json::from_json(value)
    }
}

/// Reads a JSON model and runs the load-time checks on the default grid.
pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let model = Model::from_json(&value)?;
    model.check(&GridSpec::default())?;
    Ok(model)
}

/// A built-in name, or else a path to a JSON model.
pub fn resolve(name_or_path: &str) -> Result<Model> {
    if let Ok(m) = builtin(name_or_path) {
        return Ok(m);
    }
    if Path::new(name_or_path).exists() {
        return load_model(name_or_path);
    }
    Err(Error::Unknown { kind: "model (not a built-in name or an existing file)", name: name_or_path.into() })
}

/// Convenience for callers that only need a point inside a model's chart.
pub fn center(model: &ChartModel) -> Point {
    let a = model.chart.axes();
    Point::new(0.5 * (a[0].min + a[0].max), 0.5 * (a[1].min + a[1].max), 0.5 * (a[2].min + a[2].max))
}
