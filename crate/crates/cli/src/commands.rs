use std::collections::BTreeMap;
use std::io::Write;

use distcurv::expr::{parse_expr, Point, ScalarExpr, Tape};
use distcurv::fields::{check_contact, check_transverse_pair, gram_schmidt_adapted, ContactReport, Distribution};
use distcurv::framecalc::stretch_metric_unit;
use distcurv::models::{resolve, ChartModel, BUILTINS};
use distcurv::prescribe::{prescribe as run_prescription, Margins, Method, PrescriptionProblem};
use distcurv::riemann::distribution_curvatures;
use distcurv::validate::{run_suite, Suite};
use distcurv::{Error, Result};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::{CheckArgs, CurvatureArgs, ModelsArgs, PrescribeArgs, ReportFormat, Status, TableFormat, ValidateArgs};

pub const SCHEMA_VERSION: u32 = 1;
pub const CSV_HEADER: &str = "u1,u2,u3,K,Ke,KG,c,B_XX,B_XY,B_YY";

fn write_json(out: &mut impl Write, v: &Value) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, v)?;
    writeln!(out)?;
    Ok(())
}

/// A named distribution, or else the kernel of a named one-form.
fn plane(geo: &ChartModel, name: &str) -> Result<Distribution> {
    if geo.distributions.contains_key(name) {
        return geo.distribution(name);
    }
    match geo.one_forms.get(name) {
        Some(form) => Ok(Distribution::Kernel(form.clone())),
        None => Err(Error::Unknown { kind: "distribution or one-form", name: name.into() }),
    }
}

/// Values of `exprs` at every point, in point order.
fn sample(exprs: &[ScalarExpr], points: &[Point]) -> Result<Vec<Vec<f64>>> {
    let tape = Tape::compile(exprs);
    points.par_iter().map(|p| tape.eval(p).map_err(|source| Error::Eval { point: *p, source })).collect()
}

pub fn curvature(args: &CurvatureArgs, out: &mut impl Write) -> Result<Status> {
    let model = resolve(&args.model)?;
    let geo = model.geometry()?;
    let d = geo.distribution(&args.dist)?;
    let points = geo.chart.grid(&args.grid);
    let g = match &args.a {
        Some(text) => {
            let a = parse_expr(text)?;
            for (p, v) in points.iter().zip(sample(std::slice::from_ref(&a), &points)?) {
                if !(v[0] > 0.0) {
                    return Err(Error::InvalidParameter(format!("stretch factor a = {} at {p} is not positive", v[0])));
                }
            }
            let frame = gram_schmidt_adapted(&geo.metric, &d, &points)?;
            stretch_metric_unit(&geo.metric, &frame.n, &a)
        }
        None => geo.metric.clone(),
    };
    let (_, rows) = distribution_curvatures(&g, &d, &points)?;
    match args.format {
        TableFormat::Csv => {
            writeln!(out, "{CSV_HEADER}")?;
            for r in &rows {
                let [u1, u2, u3] = r.point.0;
                let cols = [u1, u2, u3, r.k, r.k_e, r.k_g, r.c, r.b_xx, r.b_xy, r.b_yy];
                let line: Vec<String> = cols.iter().map(|v| format!("{v:.16e}")).collect();
                writeln!(out, "{}", line.join(","))?;
            }
        }
        TableFormat::Json => {
            let range = |f: fn(&distcurv::riemann::CurvatureReport) -> f64| {
                let (lo, hi) =
                    rows.iter().map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
                json!({ "min": lo, "max": hi })
            };
            let v = json!({
                "schema_version": SCHEMA_VERSION,
                "command": "curvature",
                "model": model.name,
                "dist": args.dist,
                "grid": args.grid.n,
                "a": args.a,
                "summary": { "K": range(|r| r.k), "Ke": range(|r| r.k_e), "KG": range(|r| r.k_g), "c": range(|r| r.c) },
                "rows": rows,
            });
            write_json(out, &v)?;
        }
    }
    Ok(Status::Ok)
}

fn contact_line(name: &str, r: &ContactReport) -> String {
    let sign = match r.sign {
        Some(s) => format!("{s:+}"),
        None => "none".into(),
    };
    format!(
        "contact {name}: min |c| = {:.6e} at {}, max |c| = {:.6e}, sign {sign}: {}",
        r.min_abs,
        r.argmin,
        r.max_abs,
        if r.is_contact { "contact" } else { "NOT contact" }
    )
}

pub fn check(args: &CheckArgs, out: &mut impl Write) -> Result<Status> {
    let model = resolve(&args.model)?;
    let geo = model.geometry()?;
    let points = geo.chart.grid(&args.grid);
    let mut ok = true;
    let mut lines = Vec::new();
    let mut items = Vec::new();
    for name in &args.contact {
        let r = check_contact(&plane(geo, name)?, Some(&geo.metric), &points)?;
        ok &= r.is_contact;
        lines.push(contact_line(name, &r));
        items.push(json!({ "check": "contact", "name": name, "report": r }));
    }
    if let [first, second] = args.bicontact.as_slice() {
        let r = check_transverse_pair(&plane(geo, first)?, &plane(geo, second)?, Some(&geo.metric), &points)?;
        ok &= r.is_bicontact;
        lines.push(contact_line(first, &r.first));
        lines.push(contact_line(second, &r.second));
        lines.push(format!(
            "bicontact {first} {second}: min transversality {:.6e} at {}: {}",
            r.min_transversality,
            r.argmin,
            if r.is_bicontact { "bi-contact" } else { "NOT bi-contact" }
        ));
        items.push(json!({ "check": "bicontact", "names": [first, second], "report": r }));
    }
    match args.format {
        ReportFormat::Text => {
            for l in lines {
                writeln!(out, "{l}")?;
            }
        }
        ReportFormat::Json => write_json(
            out,
            &json!({
                "schema_version": SCHEMA_VERSION,
                "command": "check",
                "model": model.name,
                "grid": args.grid.n,
                "checks": items,
                "passed": ok,
            }),
        )?,
    }
    Ok(if ok { Status::Ok } else { Status::Violation })
}

pub fn prescribe(args: &PrescribeArgs, out: &mut impl Write) -> Result<Status> {
    let method =
        Method::from_name(&args.method).ok_or_else(|| Error::Unknown { kind: "method", name: args.method.clone() })?;
    if !(args.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("--tol must be positive, got {}", args.tol)));
    }
    let model = resolve(&args.model)?;
    let geo = model.geometry()?;
    let mut problem = PrescriptionProblem::new(
        format!("{}/{}", model.name, args.dist),
        geo.chart.clone(),
        geo.metric.clone(),
        geo.distribution(&args.dist)?,
        parse_expr(&args.target)?,
        method,
    );
    problem.grid = args.grid;
    problem.tolerance = args.tol;
    problem.margins = Margins { delta_disc: args.delta_disc, delta_neg: args.delta_neg };
    if let Some(eta) = &args.eta {
        problem.eta = Some(plane(geo, eta)?);
    }
    problem.frame = match &args.frame {
        Some(name) => Some(geo.frame(name)?.clone()),
        None if method == Method::SectionalBicontact && geo.frames.len() == 1 => geo.frames.values().next().cloned(),
        None => None,
    };
    let r = run_prescription(&problem)?;
    let mut report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "prescribe",
        "model": model.name,
        "dist": args.dist,
        "method": method.name(),
        "target": args.target,
        "grid": args.grid.n,
        "tolerance": args.tol,
        "d0": r.d0,
        "lambda": r.lambda,
        "rho": r.rho,
        "base_metric": r.base_metric,
        "residual": r.residual,
    });
    write_json(out, &report)?;
    if let Some(path) = &args.out {
        let points = problem.chart.grid(&problem.grid);
        let mut exprs = vec![r.a.clone()];
        exprs.extend(r.g_final.entries().iter().cloned());
        let values = sample(&exprs, &points)?;
        report["fields"] = json!({
            "points": points,
            "a": values.iter().map(|v| v[0]).collect::<Vec<_>>(),
            "g_final_keys": ["g11", "g12", "g13", "g22", "g23", "g33"],
            "g_final": values.iter().map(|v| v[1..].to_vec()).collect::<Vec<_>>(),
        });
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        write_json(&mut file, &report)?;
        file.flush()?;
    }
    Ok(Status::Ok)
}

pub fn validate(args: &ValidateArgs, out: &mut impl Write) -> Result<Status> {
    let suite =
        Suite::from_name(&args.suite).ok_or_else(|| Error::Unknown { kind: "suite", name: args.suite.clone() })?;
    let tol = args.tol.unwrap_or(suite.default_tolerance());
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("--tol must be positive, got {tol}")));
    }
    if args.samples == 0 {
        return Err(Error::InvalidParameter("--samples must be positive".into()));
    }
    let report = run_suite(suite, args.samples, args.seed, tol)?;
    let mut per_model: BTreeMap<&str, f64> = BTreeMap::new();
    for row in &report.rows {
        let m = per_model.entry(row.model.as_str()).or_insert(0.0);
        *m = m.max(row.max);
    }
    match args.format {
        ReportFormat::Text => {
            for row in &report.rows {
                writeln!(
                    out,
                    "{:<22} {:<18} {:<34} max {:.3e} at {} {}",
                    row.model,
                    row.case,
                    row.detail,
                    row.max,
                    row.point,
                    if row.passed { "ok" } else { "FAIL" }
                )?;
            }
            for (model, max) in &per_model {
                writeln!(out, "model {model}: max deviation {max:.3e}")?;
            }
            if suite == Suite::SignCalibration {
                let pairs: Vec<String> = report.passing_signs.iter().map(|(a, b)| format!("({a:+}, {b:+})")).collect();
                writeln!(
                    out,
                    "sign pairs passing every case: {}",
                    if pairs.is_empty() { "none".into() } else { pairs.join(" ") }
                )?;
            }
            writeln!(
                out,
                "suite {}: {} (tolerance {tol:e}, {} samples, seed {})",
                suite.name(),
                if report.passed { "PASS" } else { "FAIL" },
                args.samples,
                args.seed
            )?;
        }
        ReportFormat::Json => {
            let mut v = serde_json::to_value(&report)?;
            v["schema_version"] = json!(SCHEMA_VERSION);
            v["command"] = json!("validate");
            v["suite"] = json!(suite.name());
            v["per_model"] = json!(per_model);
            write_json(out, &v)?;
        }
    }
    if report.passed {
        Ok(Status::Ok)
    } else {
        if let Some(w) = report.worst() {
            eprintln!("worst: {} {} {}: deviation {:.6e} at {}", w.model, w.case, w.detail, w.max, w.point);
        }
        Ok(Status::Violation)
    }
}

pub fn models(args: &ModelsArgs, out: &mut impl Write) -> Result<Status> {
    match &args.name {
        Some(name) => write_json(out, &resolve(name)?.to_json())?,
        None => {
            for (name, description) in BUILTINS {
                writeln!(out, "{name:<22} {description}")?;
            }
        }
    }
    Ok(Status::Ok)
}
