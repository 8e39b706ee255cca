//! Charts, vector fields, one-forms and metrics with closed-form components.
//!
//! Everything here is symbolic: a Lie bracket or a Gram-Schmidt frame is a new
//! set of [`ScalarExpr`]s, evaluated later at sample points through cached
//! tapes.

use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{at, Error, Result};
use crate::expr::{parse_expr, Axis, Differentiator, Point, ScalarExpr, Tape};

/// Minimum |invariant| for a distribution to count as contact on a grid.
pub const CONTACT_MARGIN: f64 = 1e-9;

/// Minimum normalized transversality for two planes to count as transverse.
pub const TRANSVERSE_MARGIN: f64 = 1e-9;

/// Gram-matrix deviation above which a frame is rejected as non-orthonormal.
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-8;

// ---------------------------------------------------------------------------
// charts and grids

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AxisDomain {
    pub min: f64,
    pub max: f64,
    pub periodic: bool,
}

impl AxisDomain {
    pub fn new(min: f64, max: f64, periodic: bool) -> Self {
        AxisDomain { min, max, periodic }
    }

    pub fn len(&self) -> f64 {
        self.max - self.min
    }
}

/// Coordinate box, optionally periodic along each axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    axes: [AxisDomain; 3],
}

/// Per-axis sample counts of a uniform lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct GridSpec {
    pub n: [usize; 3],
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { n: [16; 3] }
    }
}

impl GridSpec {
    pub fn uniform(n: usize) -> Self {
        GridSpec { n: [n; 3] }
    }

    /// The lattice with twice as many samples per axis.
    pub fn refined(&self) -> Self {
        GridSpec { n: self.n.map(|k| 2 * k) }
    }

    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Chart {
    pub fn new(axes: [AxisDomain; 3]) -> Result<Self> {
        for (i, a) in axes.iter().enumerate() {
            if !(a.min.is_finite() && a.max.is_finite() && a.min < a.max) {
                return Err(Error::InvalidChart(format!(
                    "axis u{} needs finite min < max, got [{}, {}]",
                    i + 1,
                    a.min,
                    a.max
                )));
            }
        }
        Ok(Chart { axes })
    }

    /// The box `[min, max]^3`, periodic on every axis or on none.
    pub fn cube(min: f64, max: f64, periodic: bool) -> Self {
        Chart::new([AxisDomain::new(min, max, periodic); 3]).expect("valid cube")
    }

    pub fn axes(&self) -> &[AxisDomain; 3] {
        &self.axes
    }

    /// Reduces periodic coordinates into `[min, max)`.
    pub fn wrap(&self, p: &Point) -> Point {
        let mut q = *p;
        for (x, a) in q.0.iter_mut().zip(&self.axes) {
            if a.periodic {
                *x = a.min + (*x - a.min).rem_euclid(a.len());
            }
        }
        q
    }

    pub fn contains(&self, p: &Point) -> bool {
        let q = self.wrap(p);
        q.0.iter().zip(&self.axes).all(|(x, a)| *x >= a.min && *x <= a.max)
    }

    /// Uniform lattice over the box. Endpoints are included on non-periodic
    /// axes; periodic axes stop one step short of `max`.
    pub fn grid(&self, spec: &GridSpec) -> Vec<Point> {
        let ticks: Vec<Vec<f64>> = self.axes.iter().zip(spec.n).map(|(a, n)| axis_ticks(a, n)).collect();
        let mut points = Vec::with_capacity(spec.len());
        for &x in &ticks[0] {
            for &y in &ticks[1] {
                for &z in &ticks[2] {
                    points.push(Point::new(x, y, z));
                }
            }
        }
        points
    }

    /// `count` points drawn uniformly from the box with a seeded generator.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let mut p = Point::default();
                for (x, a) in p.0.iter_mut().zip(&self.axes) {
                    *x = rng.gen_range(a.min..a.max);
                }
                p
            })
            .collect()
    }

    /// Numerical periodicity check: each expression must agree on opposite
    /// faces of every periodic axis, sampled on `spec`.
    pub fn check_periodic(&self, exprs: &[(String, ScalarExpr)], spec: &GridSpec, tol: f64) -> Result<()> {
        if exprs.is_empty() {
            return Ok(());
        }
        let tape = Tape::compile(&exprs.iter().map(|(_, e)| e.clone()).collect::<Vec<_>>());
        for (axis, a) in self.axes.iter().enumerate() {
            if !a.periodic {
                continue;
            }
            for p in self.grid(spec) {
                if p.0[axis] != a.min {
                    continue;
                }
                let mut q = p;
                q.0[axis] = a.max;
                let lo = tape.eval(&p).map_err(at(&p))?;
                let hi = tape.eval(&q).map_err(at(&q))?;
                for ((name, _), (x, y)) in exprs.iter().zip(lo.iter().zip(&hi)) {
                    if (x - y).abs() > tol * (1.0 + x.abs()) {
                        return Err(Error::Schema {
                            field: name.clone(),
                            reason: format!("not periodic along u{}: {x} at {p} vs {y} at {q}", axis + 1),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

fn axis_ticks(a: &AxisDomain, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (a.min + a.max)],
        _ if a.periodic => (0..n).map(|i| a.min + a.len() * i as f64 / n as f64).collect(),
        _ => (0..n).map(|i| a.min + a.len() * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Evaluates a tape at every point, in point order.
pub(crate) fn eval_all(tape: &Tape, points: &[Point]) -> Result<Vec<Vec<f64>>> {
    points.par_iter().map(|p| tape.eval(p).map_err(at(p))).collect()
}

// ---------------------------------------------------------------------------
// small symbolic vector helpers

pub(crate) type Triple = [ScalarExpr; 3];

pub(crate) fn cross(a: &Triple, b: &Triple) -> Triple {
    [
        a[1].mul(&b[2]).sub(&a[2].mul(&b[1])),
        a[2].mul(&b[0]).sub(&a[0].mul(&b[2])),
        a[0].mul(&b[1]).sub(&a[1].mul(&b[0])),
    ]
}

pub(crate) fn dot(a: &Triple, b: &Triple) -> ScalarExpr {
    a[0].mul(&b[0]).add(&a[1].mul(&b[1])).add(&a[2].mul(&b[2]))
}

pub(crate) fn cross_num(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn norm_num(a: &[f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

fn parse_triple(texts: [&str; 3]) -> Result<Triple> {
    Ok([parse_expr(texts[0])?, parse_expr(texts[1])?, parse_expr(texts[2])?])
}

// ---------------------------------------------------------------------------
// vector fields and one-forms

/// Vector field in the coordinate basis `d/du1, d/du2, d/du3`.
#[derive(Clone)]
pub struct VectorField {
    comps: Triple,
    values: OnceLock<Arc<Tape>>,
    jacobian: OnceLock<Arc<Tape>>,
}

impl std::fmt::Debug for VectorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_tuple("VectorField").field(&self.comps).finish()
    }
}

impl VectorField {
    pub fn new(comps: Triple) -> Self {
        VectorField { comps, values: OnceLock::new(), jacobian: OnceLock::new() }
    }

    pub fn parse(texts: [&str; 3]) -> Result<Self> {
        Ok(Self::new(parse_triple(texts)?))
    }

    pub fn constant(v: [f64; 3]) -> Self {
        Self::new(v.map(ScalarExpr::num))
    }

    /// The coordinate field `d/du_k`.
    pub fn coordinate(axis: Axis) -> Self {
        let mut v = [0.0; 3];
        v[axis.index()] = 1.0;
        Self::constant(v)
    }

    pub fn comps(&self) -> &Triple {
        &self.comps
    }

    pub fn comp(&self, i: usize) -> &ScalarExpr {
        &self.comps[i]
    }

    pub fn scale(&self, k: &ScalarExpr) -> Self {
        Self::new(self.comps.clone().map(|c| k.mul(&c)))
    }

    pub fn add(&self, other: &VectorField) -> Self {
        Self::new([0, 1, 2].map(|i| self.comps[i].add(&other.comps[i])))
    }

    pub fn sub(&self, other: &VectorField) -> Self {
        Self::new([0, 1, 2].map(|i| self.comps[i].sub(&other.comps[i])))
    }

    pub fn neg(&self) -> Self {
        Self::new(self.comps.clone().map(|c| c.neg()))
    }

    pub fn eval(&self, p: &Point) -> Result<[f64; 3]> {
        let tape = self.values.get_or_init(|| Arc::new(Tape::compile(&self.comps)));
        let v = tape.eval(p).map_err(at(p))?;
        Ok([v[0], v[1], v[2]])
    }

    /// Components and Jacobian `jac[k][i] = d_i V^k` at `p`.
    pub fn eval_with_jacobian(&self, p: &Point) -> Result<([f64; 3], [[f64; 3]; 3])> {
        let tape = self.jacobian.get_or_init(|| {
            let mut d = Differentiator::new();
            let mut exprs = self.comps.to_vec();
            for c in &self.comps {
                for axis in Axis::ALL {
                    exprs.push(d.derive(c, axis));
                }
            }
            Arc::new(Tape::compile(&exprs))
        });
        let v = tape.eval(p).map_err(at(p))?;
        let mut jac = [[0.0; 3]; 3];
        for k in 0..3 {
            for i in 0..3 {
                jac[k][i] = v[3 + 3 * k + i];
            }
        }
        Ok(([v[0], v[1], v[2]], jac))
    }

    /// The scalar field `V(f) = V^i d_i f`.
    pub fn apply(&self, f: &ScalarExpr) -> ScalarExpr {
        Differentiator::new().directional(f, &self.comps)
    }
}

/// One-form with coefficients of `du1, du2, du3`.
#[derive(Clone, Debug)]
pub struct OneForm {
    comps: Triple,
}

impl OneForm {
    pub fn new(comps: Triple) -> Self {
        OneForm { comps }
    }

    pub fn parse(texts: [&str; 3]) -> Result<Self> {
        Ok(Self::new(parse_triple(texts)?))
    }

    pub fn comps(&self) -> &Triple {
        &self.comps
    }

    /// `alpha(V)` as a scalar field.
    pub fn apply(&self, v: &VectorField) -> ScalarExpr {
        dot(&self.comps, v.comps())
    }

    pub fn eval(&self, p: &Point) -> Result<[f64; 3]> {
        let v = Tape::compile(&self.comps).eval(p).map_err(at(p))?;
        Ok([v[0], v[1], v[2]])
    }
}

/// Lie bracket `[S,T]^k = S^i d_i T^k - T^i d_i S^k`.
pub fn lie_bracket(s: &VectorField, t: &VectorField) -> VectorField {
    let mut d = Differentiator::new();
    let comps = [0, 1, 2].map(|k| {
        let st = d.directional(t.comp(k), s.comps());
        let ts = d.directional(s.comp(k), t.comps());
        st.sub(&ts)
    });
    VectorField::new(comps)
}

/// The scalar `c` with `alpha ^ d alpha = c du1 ^ du2 ^ du3`, i.e.
/// `alpha . curl(alpha)`.
pub fn contact_invariant(alpha: &OneForm) -> ScalarExpr {
    let a = alpha.comps();
    let mut d = Differentiator::new();
    let mut da = |i: usize, axis: Axis| d.derive(&a[i], axis);
    let curl = [
        da(2, Axis::U2).sub(&da(1, Axis::U3)),
        da(0, Axis::U3).sub(&da(2, Axis::U1)),
        da(1, Axis::U1).sub(&da(0, Axis::U2)),
    ];
    dot(a, &curl)
}

// ---------------------------------------------------------------------------
// metrics

const SYM: [[usize; 3]; 3] = [[0, 1, 2], [1, 3, 4], [2, 4, 5]];

/// Storage order of the six independent metric entries.
pub const METRIC_KEYS: [&str; 6] = ["g11", "g12", "g13", "g22", "g23", "g33"];

/// Symmetric metric tensor `g_ij` with closed-form entries.
#[derive(Clone)]
pub struct MetricField {
    entries: [ScalarExpr; 6],
    values: OnceLock<Arc<Tape>>,
    jet: OnceLock<Arc<Tape>>,
}

impl std::fmt::Debug for MetricField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_tuple("MetricField").field(&self.entries).finish()
    }
}

/// Metric value with its first and second coordinate derivatives at a point.
#[derive(Debug, Clone, Copy)]
pub struct MetricJet {
    pub g: [[f64; 3]; 3],
    /// `dg[k][i][j] = d_k g_ij`
    pub dg: [[[f64; 3]; 3]; 3],
    /// `ddg[k][l][i][j] = d_k d_l g_ij`
    pub ddg: [[[[f64; 3]; 3]; 3]; 3],
}

impl MetricField {
    /// Entries in the order of [`METRIC_KEYS`].
    pub fn new(entries: [ScalarExpr; 6]) -> Self {
        MetricField { entries, values: OnceLock::new(), jet: OnceLock::new() }
    }

    pub fn parse(texts: [&str; 6]) -> Result<Self> {
        let mut out = Vec::with_capacity(6);
        for t in texts {
            out.push(parse_expr(t)?);
        }
        Ok(Self::new(out.try_into().expect("six entries")))
    }

    pub fn euclidean() -> Self {
        Self::diagonal([ScalarExpr::one(), ScalarExpr::one(), ScalarExpr::one()])
    }

    pub fn diagonal(d: Triple) -> Self {
        let [a, b, c] = d;
        let z = ScalarExpr::zero;
        Self::new([a, z(), z(), b, z(), c])
    }

    /// `factor * identity`.
    pub fn conformal(factor: &ScalarExpr) -> Self {
        Self::diagonal([factor.clone(), factor.clone(), factor.clone()])
    }

    /// The unique metric in which `frame` is orthonormal:
    /// `g = F^{-T} F^{-1}` with `F = [X Y n]`.
    pub fn from_orthonormal_frame(frame: &Frame) -> Self {
        let cols = [frame.x.comps(), frame.y.comps(), frame.n.comps()];
        // rows of F^{-1} are the dual coframe: theta^a = (c_b x c_c) / det
        let det = dot(cols[0], &cross(cols[1], cols[2]));
        let coframe = [
            cross(cols[1], cols[2]).map(|e| e.div(&det)),
            cross(cols[2], cols[0]).map(|e| e.div(&det)),
            cross(cols[0], cols[1]).map(|e| e.div(&det)),
        ];
        Self::from_coframe(&coframe, &[1.0, 1.0, 1.0])
    }

    /// `sum_a w_a theta^a (x) theta^a`.
    pub(crate) fn from_coframe(coframe: &[Triple; 3], weights: &[f64; 3]) -> Self {
        let entry = |i: usize, j: usize| {
            let mut acc = ScalarExpr::zero();
            for (theta, w) in coframe.iter().zip(weights) {
                acc = acc.add(&theta[i].mul(&theta[j]).scale(*w));
            }
            acc
        };
        Self::new([entry(0, 0), entry(0, 1), entry(0, 2), entry(1, 1), entry(1, 2), entry(2, 2)])
    }

    pub fn entries(&self) -> &[ScalarExpr; 6] {
        &self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> &ScalarExpr {
        &self.entries[SYM[i][j]]
    }

    /// `rho * g`.
    pub fn scaled(&self, rho: f64) -> Self {
        Self::new(self.entries.clone().map(|e| e.scale(rho)))
    }

    /// `g + sum_k w_k (a_k (x) a_k)` for symmetric rank-one updates.
    pub fn rank_one_update(&self, form: &Triple, weight: &ScalarExpr) -> Self {
        let mut out = self.entries.clone();
        for i in 0..3 {
            for j in i..3 {
                let term = weight.mul(&form[i].mul(&form[j]));
                out[SYM[i][j]] = out[SYM[i][j]].add(&term);
            }
        }
        Self::new(out)
    }

    /// `<S, T>` as a scalar field.
    pub fn inner(&self, s: &Triple, t: &Triple) -> ScalarExpr {
        let mut acc = ScalarExpr::zero();
        for i in 0..3 {
            acc = acc.add(&self.entry(i, i).mul(&s[i].mul(&t[i])));
            for j in i + 1..3 {
                let sym = s[i].mul(&t[j]).add(&s[j].mul(&t[i]));
                acc = acc.add(&self.entry(i, j).mul(&sym));
            }
        }
        acc
    }

    pub fn pair(&self, s: &VectorField, t: &VectorField) -> ScalarExpr {
        self.inner(s.comps(), t.comps())
    }

    /// The covector `g(V, .)`.
    pub fn lower(&self, v: &Triple) -> Triple {
        [0, 1, 2].map(|i| {
            let mut acc = ScalarExpr::zero();
            for (j, vj) in v.iter().enumerate() {
                acc = acc.add(&self.entry(i, j).mul(vj));
            }
            acc
        })
    }

    pub fn eval(&self, p: &Point) -> Result<[[f64; 3]; 3]> {
        let tape = self.values.get_or_init(|| Arc::new(Tape::compile(&self.entries)));
        let v = tape.eval(p).map_err(at(p))?;
        Ok(unpack(&v[..6]))
    }

    /// Value, gradient and Hessian of every entry at `p`, from exact symbolic
    /// derivatives.
    pub fn jet(&self, p: &Point) -> Result<MetricJet> {
        let tape = self.jet.get_or_init(|| Arc::new(self.compile_jet()));
        let v = tape.eval(p).map_err(at(p))?;
        let g = unpack(&v[..6]);
        let mut dg = [[[0.0; 3]; 3]; 3];
        for (k, dgk) in dg.iter_mut().enumerate() {
            let flat: Vec<f64> = (0..6).map(|a| v[6 + 3 * a + k]).collect();
            *dgk = unpack(&flat);
        }
        let mut ddg = [[[[0.0; 3]; 3]; 3]; 3];
        for k in 0..3 {
            for l in 0..3 {
                let flat: Vec<f64> = (0..6).map(|a| v[24 + 6 * a + SYM[k][l]]).collect();
                ddg[k][l] = unpack(&flat);
            }
        }
        Ok(MetricJet { g, dg, ddg })
    }

    fn compile_jet(&self) -> Tape {
        let mut d = Differentiator::new();
        let mut exprs = self.entries.to_vec();
        let mut first = Vec::with_capacity(18);
        for e in &self.entries {
            for axis in Axis::ALL {
                first.push(d.derive(e, axis));
            }
        }
        exprs.extend(first.iter().cloned());
        for a in 0..6 {
            for k in 0..3 {
                for l in k..3 {
                    // slot a*6 + SYM[k][l]; SYM enumerates (k<=l) in this order
                    exprs.push(d.derive(&first[3 * a + k], Axis::ALL[l]));
                }
            }
        }
        Tape::compile(&exprs)
    }

    /// Checks positivity of the leading principal minors at every point.
    pub fn check_positive_definite(&self, points: &[Point]) -> Result<()> {
        let tape = self.values.get_or_init(|| Arc::new(Tape::compile(&self.entries)));
        let values = eval_all(tape, points)?;
        for (p, v) in points.iter().zip(values) {
            if !is_positive_definite(&unpack(&v)) {
                return Err(Error::NotPositiveDefinite { point: *p });
            }
        }
        Ok(())
    }
}

fn unpack(v: &[f64]) -> [[f64; 3]; 3] {
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = v[SYM[i][j]];
        }
    }
    m
}

pub(crate) fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

pub(crate) fn is_positive_definite(m: &[[f64; 3]; 3]) -> bool {
    m[0][0] > 0.0 && m[0][0] * m[1][1] - m[0][1] * m[1][0] > 0.0 && det3(m) > 0.0
}

pub(crate) fn inner_num(g: &[[f64; 3]; 3], s: &[f64; 3], t: &[f64; 3]) -> f64 {
    let mut acc = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            acc += g[i][j] * s[i] * t[j];
        }
    }
    acc
}

/// `S^T g T` at `p`.
pub fn metric_pair(g: &MetricField, s: &VectorField, t: &VectorField, p: &Point) -> Result<f64> {
    Ok(inner_num(&g.eval(p)?, &s.eval(p)?, &t.eval(p)?))
}

// ---------------------------------------------------------------------------
// distributions and frames

/// A plane field, as the kernel of a one-form or the span of two fields.
#[derive(Clone, Debug)]
pub enum Distribution {
    Kernel(OneForm),
    Span(VectorField, VectorField),
}

impl Distribution {
    /// A covector field annihilating the plane (the form itself, or the
    /// Euclidean cross product of the spanning fields).
    pub fn annihilator(&self) -> Triple {
        match self {
            Distribution::Kernel(alpha) => alpha.comps().clone(),
            Distribution::Span(s, t) => cross(s.comps(), t.comps()),
        }
    }
}

/// Ordered triple `(X, Y, n)` of vector fields.
#[derive(Clone, Debug)]
pub struct Frame {
    pub x: VectorField,
    pub y: VectorField,
    pub n: VectorField,
}

impl Frame {
    pub fn new(x: VectorField, y: VectorField, n: VectorField) -> Self {
        Frame { x, y, n }
    }

    pub fn members(&self) -> [&VectorField; 3] {
        [&self.x, &self.y, &self.n]
    }

    /// Gram matrix of the frame in `g` at `p`.
    pub fn gram(&self, g: &MetricField, p: &Point) -> Result<[[f64; 3]; 3]> {
        let gm = g.eval(p)?;
        let v = [self.x.eval(p)?, self.y.eval(p)?, self.n.eval(p)?];
        let mut out = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                out[a][b] = inner_num(&gm, &v[a], &v[b]);
            }
        }
        Ok(out)
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn orthonormality_deviation(&self, g: &MetricField, p: &Point) -> Result<f64> {
        let gram = self.gram(g, p)?;
        let mut dev: f64 = 0.0;
        for (a, row) in gram.iter().enumerate() {
            for (b, v) in row.iter().enumerate() {
                let target = if a == b { 1.0 } else { 0.0 };
                dev = dev.max((v - target).abs());
            }
        }
        Ok(dev)
    }

    pub fn require_orthonormal(&self, g: &MetricField, p: &Point) -> Result<()> {
        let deviation = self.orthonormality_deviation(g, p)?;
        if deviation > ORTHONORMAL_TOLERANCE {
            return Err(Error::NotOrthonormal { point: *p, deviation });
        }
        Ok(())
    }

    /// Orientation sign of `det[X Y n]` at `p`.
    pub fn orientation(&self, p: &Point) -> Result<f64> {
        let (x, y, n) = (self.x.eval(p)?, self.y.eval(p)?, self.n.eval(p)?);
        let c = cross_num(&x, &y);
        Ok((c[0] * n[0] + c[1] * n[1] + c[2] * n[2]).signum())
    }

    /// `(cos t X + sin t Y, -sin t X + cos t Y, n)`; `theta` may vary.
    pub fn rotated(&self, theta: &ScalarExpr) -> Frame {
        let (c, s) = (theta.cos(), theta.sin());
        Frame::new(self.x.scale(&c).add(&self.y.scale(&s)), self.y.scale(&c).sub(&self.x.scale(&s)), self.n.clone())
    }

    /// `(Y, X, n)`.
    pub fn swapped(&self) -> Frame {
        Frame::new(self.y.clone(), self.x.clone(), self.n.clone())
    }

    /// Scales each member by a constant.
    pub fn scaled(&self, kx: f64, ky: f64, kn: f64) -> Frame {
        let k = |v: f64| ScalarExpr::num(v);
        Frame::new(self.x.scale(&k(kx)), self.y.scale(&k(ky)), self.n.scale(&k(kn)))
    }
}

fn normalized(g: &MetricField, v: &Triple) -> Triple {
    let len = g.inner(v, v).sqrt();
    v.clone().map(|c| c.div(&len))
}

fn project_out(g: &MetricField, v: &Triple, unit: &Triple) -> Triple {
    let k = g.inner(v, unit);
    [0, 1, 2].map(|i| v[i].sub(&k.mul(&unit[i])))
}

/// Orthonormal frame adapted to `d` in the metric `g`: `X, Y` span the
/// plane, `n` is its unit normal, and `(X, Y, n)` is positively oriented.
///
/// For a kernel `ker alpha` the spanning pair is `alpha x e_k` and
/// `alpha x (alpha x e_k)` (Euclidean cross products), where `e_k` is the
/// coordinate axis least aligned with `alpha` over `samples`, ties going to
/// the lowest index. The normal comes from orthonormalizing the coefficient
/// vector of the annihilator against the plane.
pub fn gram_schmidt_adapted(g: &MetricField, d: &Distribution, samples: &[Point]) -> Result<Frame> {
    g.check_positive_definite(samples)?;
    let (s, t) = spanning_pair(d, samples)?;
    let (v1, v2) = (s.comps().clone(), t.comps().clone());
    let transversal = match d {
        Distribution::Kernel(alpha) => alpha.comps().clone(),
        Distribution::Span(..) => cross(&v1, &v2),
    };
    let x = normalized(g, &v1);
    let y = normalized(g, &project_out(g, &v2, &x));
    let w = project_out(g, &project_out(g, &transversal, &x), &y);
    let n = normalized(g, &w);
    Ok(Frame::new(VectorField::new(x), VectorField::new(y), VectorField::new(n)))
}

/// Two fields spanning `d` at every sample point, before any
/// orthonormalization. See [`gram_schmidt_adapted`] for the kernel rule.
pub fn spanning_pair(d: &Distribution, samples: &[Point]) -> Result<(VectorField, VectorField)> {
    let (v1, v2) = match d {
        Distribution::Kernel(alpha) => {
            let a = alpha.comps();
            let tape = Tape::compile(a);
            let values = eval_all(&tape, samples)?;
            let mut best: Option<(usize, f64, Point)> = None;
            for k in 0..3 {
                let mut worst = (f64::INFINITY, Point::default());
                for (p, v) in samples.iter().zip(&values) {
                    let av = [v[0], v[1], v[2]];
                    let na = norm_num(&av);
                    if na == 0.0 {
                        return Err(Error::Degenerate { what: "one-form (vanishes)".into(), point: *p });
                    }
                    let mut e = [0.0; 3];
                    e[k] = 1.0;
                    let s = norm_num(&cross_num(&av, &e)) / na;
                    if s < worst.0 {
                        worst = (s, *p);
                    }
                }
                if best.as_ref().is_none_or(|b| worst.0 > b.1) {
                    best = Some((k, worst.0, worst.1));
                }
            }
            let (k, margin, point) = best.expect("three axes");
            if margin < 1e-6 {
                return Err(Error::Degenerate {
                    what: "kernel distribution (no coordinate axis stays transverse to the form)".into(),
                    point,
                });
            }
            let mut e = [ScalarExpr::zero(), ScalarExpr::zero(), ScalarExpr::zero()];
            e[k] = ScalarExpr::one();
            let v1 = cross(a, &e);
            let v2 = cross(a, &v1);
            (v1, v2)
        }
        Distribution::Span(s, t) => {
            let tape = Tape::compile(&[s.comps().clone(), t.comps().clone()].concat());
            for (p, v) in samples.iter().zip(eval_all(&tape, samples)?) {
                let (sv, tv) = ([v[0], v[1], v[2]], [v[3], v[4], v[5]]);
                let scale = norm_num(&sv) * norm_num(&tv);
                if scale == 0.0 || norm_num(&cross_num(&sv, &tv)) / scale < 1e-9 {
                    return Err(Error::Degenerate { what: "spanning pair (parallel fields)".into(), point: *p });
                }
            }
            (s.comps().clone(), t.comps().clone())
        }
    };
    Ok((VectorField::new(v1), VectorField::new(v2)))
}

/// How a contact check measured the distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactInvariant {
    /// `c` with `alpha ^ d alpha = c du1 ^ du2 ^ du3`.
    Form,
    /// `<[X,Y], n>` in a positively oriented adapted frame.
    Bracket,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ContactReport {
    pub invariant: ContactInvariant,
    pub min_abs: f64,
    pub max_abs: f64,
    pub argmin: Point,
    pub is_contact: bool,
    /// Sign of `alpha ^ d alpha` relative to `du1 ^ du2 ^ du3` when constant.
    pub sign: Option<i8>,
}

fn contact_invariant_field(
    d: &Distribution,
    g: Option<&MetricField>,
    points: &[Point],
) -> Result<(ContactInvariant, ScalarExpr)> {
    match d {
        Distribution::Kernel(alpha) => Ok((ContactInvariant::Form, contact_invariant(alpha))),
        Distribution::Span(..) => {
            let g =
                g.ok_or_else(|| Error::InvalidParameter("a metric is needed to check a spanned distribution".into()))?;
            let frame = gram_schmidt_adapted(g, d, points)?;
            let bracket = lie_bracket(&frame.x, &frame.y);
            Ok((ContactInvariant::Bracket, g.pair(&bracket, &frame.n)))
        }
    }
}

/// Checks whether `d` is contact on `points`.
///
/// For a positively oriented adapted frame `(X, Y, n)` and `alpha = g(n, .)`,
/// `alpha ^ d alpha (X, Y, n) = -<[X,Y], n>`, so the bracket invariant has the
/// opposite sign of the form invariant; `sign` always reports the latter.
pub fn check_contact(d: &Distribution, g: Option<&MetricField>, points: &[Point]) -> Result<ContactReport> {
    let (invariant, field) = contact_invariant_field(d, g, points)?;
    let tape = Tape::compile(std::slice::from_ref(&field));
    let values: Vec<f64> = eval_all(&tape, points)?.into_iter().map(|v| v[0]).collect();
    let mut min_abs = f64::INFINITY;
    let mut max_abs: f64 = 0.0;
    let mut argmin = Point::default();
    for (p, v) in points.iter().zip(&values) {
        if v.abs() < min_abs {
            min_abs = v.abs();
            argmin = *p;
        }
        max_abs = max_abs.max(v.abs());
    }
    let is_contact = min_abs >= CONTACT_MARGIN;
    let sign = if is_contact {
        let s = values[0].signum();
        let constant = values.iter().all(|v| v.signum() == s);
        let form_sign = match invariant {
            ContactInvariant::Form => s,
            ContactInvariant::Bracket => -s,
        };
        constant.then_some(form_sign as i8)
    } else {
        None
    };
    Ok(ContactReport { invariant, min_abs, max_abs, argmin, is_contact, sign })
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct TransverseReport {
    /// Minimum over the points of `|w1 x w2| / (|w1| |w2|)` for the
    /// annihilating covectors `w1, w2`.
    pub min_transversality: f64,
    pub argmin: Point,
    pub first: ContactReport,
    pub second: ContactReport,
    pub is_bicontact: bool,
}

/// Transversality and bi-contact check for a pair of distributions.
pub fn check_transverse_pair(
    d1: &Distribution,
    d2: &Distribution,
    g: Option<&MetricField>,
    points: &[Point],
) -> Result<TransverseReport> {
    let tape = Tape::compile(&[d1.annihilator(), d2.annihilator()].concat());
    let mut min_t = f64::INFINITY;
    let mut argmin = Point::default();
    for (p, v) in points.iter().zip(eval_all(&tape, points)?) {
        let (a, b) = ([v[0], v[1], v[2]], [v[3], v[4], v[5]]);
        let scale = norm_num(&a) * norm_num(&b);
        if scale == 0.0 {
            return Err(Error::Degenerate { what: "distribution (vanishing annihilator)".into(), point: *p });
        }
        let t = norm_num(&cross_num(&a, &b)) / scale;
        if t < min_t {
            min_t = t;
            argmin = *p;
        }
    }
    let first = check_contact(d1, g, points)?;
    let second = check_contact(d2, g, points)?;
    let opposite = matches!((first.sign, second.sign), (Some(a), Some(b)) if a == -b);
    let is_bicontact = first.is_contact && second.is_contact && opposite && min_t > TRANSVERSE_MARGIN;
    Ok(TransverseReport { min_transversality: min_t, argmin, first, second, is_bicontact })
}
