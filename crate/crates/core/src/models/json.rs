use std::collections::BTreeMap;

use serde_json::{json, Map, Value};

use super::{ChartModel, DistributionDef, Model};
use crate::error::{Error, Result};
use crate::expr::{parse_expr, ScalarExpr};
use crate::fields::{AxisDomain, Chart, Frame, MetricField, OneForm, VectorField, METRIC_KEYS};
use crate::framecalc::FrameData;

const TOP_KEYS: [&str; 8] =
    ["name", "description", "domain", "metric", "one_forms", "distributions", "frames", "frame_data"];

fn schema(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Schema { field: field.into(), reason: reason.into() }
}

fn expr(value: &Value, field: &str) -> Result<ScalarExpr> {
    let text = value.as_str().ok_or_else(|| schema(field, "expected an expression string"))?;
    parse_expr(text).map_err(|e| schema(field, format!("{e} in `{text}`")))
}

fn triple(value: &Value, field: &str) -> Result<[ScalarExpr; 3]> {
    let items = value.as_array().ok_or_else(|| schema(field, "expected an array of three expressions"))?;
    if items.len() != 3 {
        return Err(schema(field, format!("expected three components, got {}", items.len())));
    }
    Ok([
        expr(&items[0], &format!("{field}[0]"))?,
        expr(&items[1], &format!("{field}[1]"))?,
        expr(&items[2], &format!("{field}[2]"))?,
    ])
}

fn object<'a>(value: &'a Value, field: &str) -> Result<&'a Map<String, Value>> {
    value.as_object().ok_or_else(|| schema(field, "expected an object"))
}

fn domain(value: &Value) -> Result<Chart> {
    let axes = value.as_array().ok_or_else(|| schema("domain", "expected three [min, max, periodic?] entries"))?;
    if axes.len() != 3 {
        return Err(schema("domain", format!("expected three axes, got {}", axes.len())));
    }
    let mut out = [AxisDomain::new(0.0, 1.0, false); 3];
    for (i, a) in axes.iter().enumerate() {
        let field = format!("domain[{i}]");
        let items = a.as_array().ok_or_else(|| schema(&field, "expected [min, max] or [min, max, periodic]"))?;
        let num =
            |k: usize| items.get(k).and_then(Value::as_f64).ok_or_else(|| schema(&field, "bounds must be numbers"));
        let periodic = match items.len() {
            2 => false,
            3 => items[2].as_bool().ok_or_else(|| schema(&field, "periodic flag must be a boolean"))?,
            n => return Err(schema(&field, format!("expected 2 or 3 entries, got {n}"))),
        };
        out[i] = AxisDomain::new(num(0)?, num(1)?, periodic);
    }
    Chart::new(out).map_err(|e| schema("domain", e.to_string()))
}

fn metric(value: &Value) -> Result<MetricField> {
    let map = object(value, "metric")?;
    for key in map.keys() {
        if !METRIC_KEYS.contains(&key.as_str()) {
            return Err(schema(
                format!("metric.{key}"),
                format!("unexpected key; the metric is given by its upper triangle {}", METRIC_KEYS.join(", ")),
            ));
        }
    }
    let mut entries = Vec::with_capacity(6);
    for key in METRIC_KEYS {
        let v = map.get(key).ok_or_else(|| schema(format!("metric.{key}"), "missing entry"))?;
        entries.push(expr(v, &format!("metric.{key}"))?);
    }
    Ok(MetricField::new(entries.try_into().expect("six entries")))
}

fn frame_data(value: &Value) -> Result<FrameData> {
    serde_json::from_value(value.clone()).map_err(|e| schema("frame_data", e.to_string()))
}

pub(super) fn from_json(value: &Value) -> Result<Model> {
    let top = object(value, "model")?;
    for key in top.keys() {
        if !TOP_KEYS.contains(&key.as_str()) {
            return Err(schema(key.clone(), "unknown key"));
        }
    }
    let name = top.get("name").and_then(Value::as_str).ok_or_else(|| schema("name", "expected a string"))?.to_string();
    let description = top.get("description").and_then(Value::as_str).unwrap_or_default().to_string();
    let frame_data = top.get("frame_data").map(frame_data).transpose()?;

    let geometry = match (top.get("domain"), top.get("metric")) {
        (None, None) if frame_data.is_some() => None,
        (Some(d), Some(m)) => {
            let mut g = ChartModel {
                chart: domain(d)?,
                metric: metric(m)?,
                one_forms: BTreeMap::new(),
                distributions: BTreeMap::new(),
                frames: BTreeMap::new(),
            };
            if let Some(forms) = top.get("one_forms") {
                for (k, v) in object(forms, "one_forms")? {
                    g.one_forms.insert(k.clone(), OneForm::new(triple(v, &format!("one_forms.{k}"))?));
                }
            }
            if let Some(dists) = top.get("distributions") {
                for (k, v) in object(dists, "distributions")? {
                    let field = format!("distributions.{k}");
                    let spec = object(v, &field)?;
                    let def = match (spec.get("kernel"), spec.get("span"), spec.len()) {
                        (Some(form), None, 1) => {
                            let form = form.as_str().ok_or_else(|| schema(&field, "kernel must name a one-form"))?;
                            if !g.one_forms.contains_key(form) {
                                return Err(schema(format!("{field}.kernel"), format!("no one-form named `{form}`")));
                            }
                            DistributionDef::Kernel(form.into())
                        }
                        (None, Some(span), 1) => {
                            let pair = span
                                .as_array()
                                .filter(|a| a.len() == 2)
                                .ok_or_else(|| schema(format!("{field}.span"), "expected two vector fields"))?;
                            DistributionDef::Span(
                                VectorField::new(triple(&pair[0], &format!("{field}.span[0]"))?),
                                VectorField::new(triple(&pair[1], &format!("{field}.span[1]"))?),
                            )
                        }
                        _ => {
                            return Err(schema(
                                &field,
                                "expected exactly one of {\"kernel\": name} or {\"span\": [v, w]}",
                            ))
                        }
                    };
                    g.distributions.insert(k.clone(), def);
                }
            }
            if let Some(frames) = top.get("frames") {
                for (k, v) in object(frames, "frames")? {
                    let field = format!("frames.{k}");
                    let spec = object(v, &field)?;
                    let member = |m: &str| {
                        let value = spec.get(m).ok_or_else(|| schema(format!("{field}.{m}"), "missing member"))?;
                        Ok::<_, Error>(VectorField::new(triple(value, &format!("{field}.{m}"))?))
                    };
                    if spec.len() != 3 {
                        return Err(schema(&field, "expected exactly the members X, Y, n"));
                    }
                    g.frames.insert(k.clone(), Frame::new(member("X")?, member("Y")?, member("n")?));
                }
            }
            Some(g)
        }
        (None, _) => return Err(schema("domain", "missing (required unless only frame_data is given)")),
        (_, None) => return Err(schema("metric", "missing (required unless only frame_data is given)")),
    };
    Ok(Model { name, description, geometry, frame_data })
}

fn strings(comps: &[ScalarExpr; 3]) -> Value {
    json!(comps.iter().map(|e| e.to_string()).collect::<Vec<_>>())
}

pub(super) fn to_json(model: &Model) -> Value {
    let mut top = Map::new();
    top.insert("name".into(), json!(model.name));
    if !model.description.is_empty() {
        top.insert("description".into(), json!(model.description));
    }
    if let Some(g) = &model.geometry {
        let domain: Vec<Value> = g.chart.axes().iter().map(|a| json!([a.min, a.max, a.periodic])).collect();
        top.insert("domain".into(), Value::Array(domain));
        let metric: Map<String, Value> =
            METRIC_KEYS.iter().zip(g.metric.entries()).map(|(k, e)| (k.to_string(), json!(e.to_string()))).collect();
        top.insert("metric".into(), Value::Object(metric));
        let forms: Map<String, Value> = g.one_forms.iter().map(|(k, f)| (k.clone(), strings(f.comps()))).collect();
        top.insert("one_forms".into(), Value::Object(forms));
        let dists: Map<String, Value> = g
            .distributions
            .iter()
            .map(|(k, d)| {
                let v = match d {
                    DistributionDef::Kernel(f) => json!({ "kernel": f }),
                    DistributionDef::Span(s, t) => json!({ "span": [strings(s.comps()), strings(t.comps())] }),
                };
                (k.clone(), v)
            })
            .collect();
        top.insert("distributions".into(), Value::Object(dists));
        let frames: Map<String, Value> = g
            .frames
            .iter()
            .map(|(k, f)| {
                (k.clone(), json!({ "X": strings(f.x.comps()), "Y": strings(f.y.comps()), "n": strings(f.n.comps()) }))
            })
            .collect();
        top.insert("frames".into(), Value::Object(frames));
    }
    if let Some(fd) = &model.frame_data {
        top.insert("frame_data".into(), serde_json::to_value(fd).expect("plain numbers"));
    }
    Value::Object(top)
}
