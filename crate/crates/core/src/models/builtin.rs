use std::collections::BTreeMap;
use std::f64::consts::TAU;

use super::{ChartModel, DistributionDef, Model};
use crate::error::{Error, Result};
use crate::fields::{AxisDomain, Chart, Frame, MetricField, OneForm, VectorField};
use crate::framecalc::FrameData;

/// Names accepted by [`builtin`], with one-line descriptions.
pub const BUILTINS: [(&str, &str); 6] = [
    ("t3-propeller", "flat 3-torus with the bi-contact pair ker(alpha), ker(beta) and an adapted frame"),
    ("t3-flat-foliation", "flat 3-torus foliated by the planes u3 = const"),
    ("r3-heisenberg", "Euclidean box with the standard contact form du3 - u2 du1"),
    ("s3-round", "unit 3-sphere in a stereographic chart with its standard contact structure"),
    ("hyperbolic-halfspace", "upper half-space model of hyperbolic space, foliated by horospheres"),
    ("su2-constants", "left-invariant frame of SU(2): [X,Y] = 2n, [Y,n] = 2X, [n,X] = 2Y"),
];

fn form(c: [&str; 3]) -> OneForm {
    OneForm::parse(c).expect("built-in one-form")
}

fn field(c: [&str; 3]) -> VectorField {
    VectorField::parse(c).expect("built-in vector field")
}

fn kernel(name: &str) -> DistributionDef {
    DistributionDef::Kernel(name.into())
}

fn chart_model(chart: Chart, metric: MetricField) -> ChartModel {
    ChartModel { chart, metric, one_forms: BTreeMap::new(), distributions: BTreeMap::new(), frames: BTreeMap::new() }
}

fn described(name: &str) -> String {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, d)| d.to_string()).unwrap_or_default()
}

pub fn builtin(name: &str) -> Result<Model> {
    let geometry = match name {
        "t3-propeller" => {
            let mut m = chart_model(Chart::cube(0.0, TAU, true), MetricField::euclidean());
            m.one_forms.insert("alpha".into(), form(["cos(u3)", "-sin(u3)", "1"]));
            m.one_forms.insert("beta".into(), form(["cos(u3)", "sin(u3)", "0"]));
            m.distributions.insert("xi".into(), kernel("alpha"));
            m.distributions.insert("eta".into(), kernel("beta"));
            // X spans both planes, Y lies in ker alpha, n in ker beta
            m.frames.insert(
                "bicontact".into(),
                Frame::new(
                    field(["-sin(u3)", "cos(u3)", "sin(2*u3)"]),
                    field(["cos(u3)", "sin(u3)", "-cos(2*u3)"]),
                    field(["0", "0", "1"]),
                ),
            );
            Some(m)
        }
        "t3-flat-foliation" => {
            let mut m = chart_model(Chart::cube(0.0, TAU, true), MetricField::euclidean());
            m.one_forms.insert("alpha".into(), form(["0", "0", "1"]));
            m.distributions.insert("xi".into(), kernel("alpha"));
            m.frames.insert(
                "coordinate".into(),
                Frame::new(field(["1", "0", "0"]), field(["0", "1", "0"]), field(["0", "0", "1"])),
            );
            Some(m)
        }
        "r3-heisenberg" => {
            let mut m = chart_model(Chart::cube(-1.0, 1.0, false), MetricField::euclidean());
            m.one_forms.insert("alpha".into(), form(["-u2", "0", "1"]));
            m.distributions.insert("xi".into(), kernel("alpha"));
            Some(m)
        }
        "s3-round" => {
            let r2 = "(u1^2 + u2^2 + u3^2)";
            let factor = format!("4/(1 + {r2})^2");
            let f = factor.as_str();
            let metric = MetricField::parse([f, "0", "0", f, "0", f]).expect("built-in metric");
            let mut m = chart_model(Chart::cube(-1.5, 1.5, false), metric);
            // standard contact form on S^3 pulled back by inverse stereographic
            // projection, up to the positive factor 2/(1 + |u|^2)^2
            let a3 = format!("1 - {r2} + 2*u3^2");
            m.one_forms.insert("alpha".into(), form(["2*u1*u3 - 2*u2", "2*u1 + 2*u2*u3", &a3]));
            // pullbacks of three left-invariant fields; the first two span ker alpha
            let w1 = field(["-u3 - u1*u2", &format!("({r2} - 1)/2 - u2^2"), "u1 - u2*u3"]);
            let w2 = field([&format!("(1 - {r2})/2 + u1^2"), "u1*u2 - u3", "u2 + u1*u3"]);
            let h = field(["u1*u3 - u2", "u1 + u2*u3", &format!("(1 - {r2})/2 + u3^2")]);
            m.distributions.insert("xi".into(), DistributionDef::Span(w1.clone(), w2.clone()));
            m.frames.insert("left".into(), Frame::new(w1, w2, h));
            Some(m)
        }
        "hyperbolic-halfspace" => {
            let chart = Chart::new([
                AxisDomain::new(-1.0, 1.0, false),
                AxisDomain::new(-1.0, 1.0, false),
                AxisDomain::new(0.5, 2.0, false),
            ])?;
            let f = "1/u3^2";
            let mut m = chart_model(chart, MetricField::parse([f, "0", "0", f, "0", f]).expect("built-in metric"));
            m.one_forms.insert("alpha".into(), form(["0", "0", "1"]));
            m.distributions.insert("xi".into(), kernel("alpha"));
            Some(m)
        }
        "su2-constants" => None,
        _ => return Err(Error::Unknown { kind: "built-in model", name: name.into() }),
    };
    let frame_data = (name == "su2-constants").then(FrameData::su2);
    Ok(Model { name: name.into(), description: described(name), geometry, frame_data })
}
