//! Closed-form scalar fields on a three-dimensional chart.
//!
//! A [`ScalarExpr`] is an immutable, reference-counted expression DAG over the
//! chart coordinates `u1, u2, u3`. The grammar is closed under partial
//! differentiation, so every derivative is again a `ScalarExpr`. Sub-trees are
//! shared freely: the derivative of `f*g` points back at the very same `f` and
//! `g` nodes instead of copying them, which keeps high-order derivatives small.
//!
//! Evaluation goes through a [`Tape`], a flattened and structurally
//! de-duplicated instruction list. Walking a shared DAG as a tree would revisit
//! shared nodes once per path.

mod derive;
mod parse;
mod tape;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

pub use derive::Differentiator;
pub use parse::{parse_expr, ParseError};
pub use tape::Tape;

/// A point of a chart, in coordinates `(u1, u2, u3)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct Point(pub [f64; 3]);

impl Point {
    pub fn new(u1: f64, u2: f64, u3: f64) -> Self {
        Point([u1, u2, u3])
    }

    pub fn coords(&self) -> [f64; 3] {
        self.0
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.0[0], self.0[1], self.0[2])
    }
}

/// Coordinate axis of a chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    U1,
    U2,
    U3,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::U1, Axis::U2, Axis::U3];

    /// Zero-based index of the axis.
    pub fn index(self) -> usize {
        match self {
            Axis::U1 => 0,
            Axis::U2 => 1,
            Axis::U3 => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Axis> {
        Axis::ALL.get(i).copied()
    }
}

/// Unary functions of the grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
    Tanh,
    Atan,
}

impl Func {
    pub const ALL: [Func; 10] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
        Func::Atan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Atan => "atan",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }

    /// Applies the function, returning `None` outside its real domain.
    pub fn apply(self, x: f64) -> Option<f64> {
        match self {
            Func::Sin => Some(x.sin()),
            Func::Cos => Some(x.cos()),
            Func::Tan => Some(x.tan()),
            Func::Exp => Some(x.exp()),
            Func::Log => (x > 0.0).then(|| x.ln()),
            Func::Sqrt => (x >= 0.0).then(|| x.sqrt()),
            Func::Sinh => Some(x.sinh()),
            Func::Cosh => Some(x.cosh()),
            Func::Tanh => Some(x.tanh()),
            Func::Atan => Some(x.atan()),
        }
    }
}

#[derive(Debug)]
pub(crate) enum Node {
    Num(f64),
    Pi,
    Coord(Axis),
    Neg(ScalarExpr),
    Add(ScalarExpr, ScalarExpr),
    Sub(ScalarExpr, ScalarExpr),
    Mul(ScalarExpr, ScalarExpr),
    Div(ScalarExpr, ScalarExpr),
    /// Power with a constant real exponent.
    Pow(ScalarExpr, f64),
    Call(Func, ScalarExpr),
}

/// Immutable scalar expression in the chart coordinates.
#[derive(Clone)]
pub struct ScalarExpr(pub(crate) Arc<Node>);

/// Evaluation failure, carrying the offending sub-expression.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("division by zero in `{subexpr}`")]
    DivisionByZero { subexpr: String },
    #[error("{func} argument {value} outside its domain in `{subexpr}`")]
    Domain { func: String, value: f64, subexpr: String },
}

impl ScalarExpr {
    fn from_node(node: Node) -> Self {
        ScalarExpr(Arc::new(node))
    }

    pub fn num(x: f64) -> Self {
        Self::from_node(Node::Num(x))
    }

    pub fn zero() -> Self {
        Self::num(0.0)
    }

    pub fn one() -> Self {
        Self::num(1.0)
    }

    pub fn pi() -> Self {
        Self::from_node(Node::Pi)
    }

    pub fn coord(axis: Axis) -> Self {
        Self::from_node(Node::Coord(axis))
    }

    /// The three coordinate functions `u1, u2, u3`.
    pub fn coords() -> [ScalarExpr; 3] {
        [Self::coord(Axis::U1), Self::coord(Axis::U2), Self::coord(Axis::U3)]
    }

    pub(crate) fn node(&self) -> &Node {
        &self.0
    }

    pub(crate) fn ptr_id(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    /// The constant value, if this is a literal or `pi`.
    pub fn as_constant(&self) -> Option<f64> {
        match *self.node() {
            Node::Num(x) => Some(x),
            Node::Pi => Some(std::f64::consts::PI),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(*self.node(), Node::Num(x) if x == 0.0)
    }

    pub fn is_one(&self) -> bool {
        matches!(*self.node(), Node::Num(x) if x == 1.0)
    }

    /// True when no coordinate occurs anywhere in the expression.
    pub fn is_constant(&self) -> bool {
        let mut seen = HashMap::new();
        !self.mentions_coord(&mut seen)
    }

    fn mentions_coord(&self, seen: &mut HashMap<usize, bool>) -> bool {
        if let Some(&v) = seen.get(&self.ptr_id()) {
            return v;
        }
        let v = match self.node() {
            Node::Num(_) | Node::Pi => false,
            Node::Coord(_) => true,
            Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => a.mentions_coord(seen),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.mentions_coord(seen) || b.mentions_coord(seen)
            }
        };
        seen.insert(self.ptr_id(), v);
        v
    }

    pub fn neg(&self) -> Self {
        match self.node() {
            Node::Num(x) => Self::num(-x),
            Node::Neg(a) => a.clone(),
            _ => Self::from_node(Node::Neg(self.clone())),
        }
    }

    pub fn add(&self, rhs: &ScalarExpr) -> Self {
        if let (Some(a), Some(b)) = (lit(self), lit(rhs)) {
            return Self::num(a + b);
        }
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        Self::from_node(Node::Add(self.clone(), rhs.clone()))
    }

    pub fn sub(&self, rhs: &ScalarExpr) -> Self {
        if let (Some(a), Some(b)) = (lit(self), lit(rhs)) {
            return Self::num(a - b);
        }
        if rhs.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return rhs.neg();
        }
        Self::from_node(Node::Sub(self.clone(), rhs.clone()))
    }

    pub fn mul(&self, rhs: &ScalarExpr) -> Self {
        if let (Some(a), Some(b)) = (lit(self), lit(rhs)) {
            return Self::num(a * b);
        }
        if self.is_zero() || rhs.is_zero() {
            return Self::zero();
        }
        if self.is_one() {
            return rhs.clone();
        }
        if rhs.is_one() {
            return self.clone();
        }
        if matches!(*self.node(), Node::Num(x) if x == -1.0) {
            return rhs.neg();
        }
        if matches!(*rhs.node(), Node::Num(x) if x == -1.0) {
            return self.neg();
        }
        Self::from_node(Node::Mul(self.clone(), rhs.clone()))
    }

    pub fn div(&self, rhs: &ScalarExpr) -> Self {
        if let (Some(a), Some(b)) = (lit(self), lit(rhs)) {
            if b != 0.0 {
                return Self::num(a / b);
            }
        }
        if rhs.is_one() {
            return self.clone();
        }
        if self.is_zero() && !rhs.is_zero() {
            return Self::zero();
        }
        Self::from_node(Node::Div(self.clone(), rhs.clone()))
    }

    /// `self ^ exponent` for a constant exponent.
    pub fn powf(&self, exponent: f64) -> Self {
        if exponent == 0.0 {
            return Self::one();
        }
        if exponent == 1.0 {
            return self.clone();
        }
        if let Some(a) = lit(self) {
            let v = a.powf(exponent);
            if v.is_finite() {
                return Self::num(v);
            }
        }
        Self::from_node(Node::Pow(self.clone(), exponent))
    }

    /// General power `self ^ exponent`, lowered to `exp(exponent * log(self))`
    /// when the exponent is not constant.
    pub fn pow(&self, exponent: &ScalarExpr) -> Self {
        if exponent.is_constant() {
            if let Ok(e) = exponent.eval(&Point::default()) {
                return self.powf(e);
            }
        }
        exponent.mul(&self.log()).exp()
    }

    pub fn call(&self, func: Func) -> Self {
        if let Some(a) = lit(self) {
            if let Some(v) = func.apply(a).filter(|v| v.is_finite()) {
                return Self::num(v);
            }
        }
        Self::from_node(Node::Call(func, self.clone()))
    }

    pub fn sin(&self) -> Self {
        self.call(Func::Sin)
    }
    pub fn cos(&self) -> Self {
        self.call(Func::Cos)
    }
    pub fn tan(&self) -> Self {
        self.call(Func::Tan)
    }
    pub fn exp(&self) -> Self {
        self.call(Func::Exp)
    }
    pub fn log(&self) -> Self {
        self.call(Func::Log)
    }
    pub fn sqrt(&self) -> Self {
        self.call(Func::Sqrt)
    }
    pub fn sinh(&self) -> Self {
        self.call(Func::Sinh)
    }
    pub fn cosh(&self) -> Self {
        self.call(Func::Cosh)
    }
    pub fn tanh(&self) -> Self {
        self.call(Func::Tanh)
    }
    pub fn atan(&self) -> Self {
        self.call(Func::Atan)
    }

    pub fn square(&self) -> Self {
        self.mul(self)
    }

    pub fn scale(&self, k: f64) -> Self {
        ScalarExpr::num(k).mul(self)
    }

    /// Exact partial derivative along `axis`.
    pub fn derive(&self, axis: Axis) -> Self {
        Differentiator::new().derive(self, axis)
    }

    /// Evaluates at `p`. Compiles a throwaway tape; hold a [`Tape`] for
    /// repeated evaluation.
    pub fn eval(&self, p: &Point) -> Result<f64, EvalError> {
        Ok(Tape::compile(std::slice::from_ref(self)).eval(p)?[0])
    }

    /// Symbolic derivative and central finite difference with step `h`.
    pub fn fd_check(&self, p: &Point, axis: Axis, h: f64) -> Result<(f64, f64), EvalError> {
        assert!(h > 0.0, "finite-difference step must be positive");
        let symbolic = self.derive(axis).eval(p)?;
        let tape = Tape::compile(std::slice::from_ref(self));
        let mut fwd = *p;
        let mut bwd = *p;
        fwd.0[axis.index()] += h;
        bwd.0[axis.index()] -= h;
        let central = (tape.eval(&fwd)?[0] - tape.eval(&bwd)?[0]) / (2.0 * h);
        Ok((symbolic, central))
    }

    /// Number of nodes in the fully expanded tree (saturating).
    pub fn tree_size(&self) -> u64 {
        fn go(e: &ScalarExpr, memo: &mut HashMap<usize, u64>) -> u64 {
            if let Some(&s) = memo.get(&e.ptr_id()) {
                return s;
            }
            let s = match e.node() {
                Node::Num(_) | Node::Pi | Node::Coord(_) => 1,
                Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => go(a, memo).saturating_add(1),
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                    go(a, memo).saturating_add(go(b, memo)).saturating_add(1)
                }
            };
            memo.insert(e.ptr_id(), s);
            s
        }
        go(self, &mut HashMap::new())
    }

    /// Number of distinct nodes in the DAG.
    pub fn dag_size(&self) -> usize {
        Tape::compile(std::slice::from_ref(self)).len()
    }
}

fn lit(e: &ScalarExpr) -> Option<f64> {
    match *e.node() {
        Node::Num(x) => Some(x),
        _ => None,
    }
}

impl From<f64> for ScalarExpr {
    fn from(x: f64) -> Self {
        ScalarExpr::num(x)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident) => {
        impl std::ops::$trait<&ScalarExpr> for &ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: &ScalarExpr) -> ScalarExpr {
                ScalarExpr::$method(self, rhs)
            }
        }
        impl std::ops::$trait<ScalarExpr> for ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: ScalarExpr) -> ScalarExpr {
                ScalarExpr::$method(&self, &rhs)
            }
        }
        impl std::ops::$trait<&ScalarExpr> for ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: &ScalarExpr) -> ScalarExpr {
                ScalarExpr::$method(&self, rhs)
            }
        }
        impl std::ops::$trait<ScalarExpr> for &ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: ScalarExpr) -> ScalarExpr {
                ScalarExpr::$method(self, &rhs)
            }
        }
        impl std::ops::$trait<f64> for &ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: f64) -> ScalarExpr {
                ScalarExpr::$method(self, &ScalarExpr::num(rhs))
            }
        }
        impl std::ops::$trait<f64> for ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: f64) -> ScalarExpr {
                ScalarExpr::$method(&self, &ScalarExpr::num(rhs))
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl std::ops::Neg for ScalarExpr {
    type Output = ScalarExpr;
    fn neg(self) -> ScalarExpr {
        ScalarExpr::neg(&self)
    }
}

impl std::ops::Neg for &ScalarExpr {
    type Output = ScalarExpr;
    fn neg(self) -> ScalarExpr {
        ScalarExpr::neg(self)
    }
}

// Canonical printer. Precedence levels: 1 additive, 2 multiplicative,
// 3 unary minus, 4 power, 5 atom.
fn precedence(node: &Node) -> u8 {
    match node {
        Node::Add(..) | Node::Sub(..) => 1,
        Node::Mul(..) | Node::Div(..) => 2,
        Node::Neg(_) => 3,
        Node::Num(x) if *x < 0.0 || x.is_sign_negative() => 3,
        Node::Pow(..) => 4,
        _ => 5,
    }
}

fn write_number(f: &mut fmt::Formatter<'_>, x: f64) -> fmt::Result {
    if x.is_finite() {
        if x < 0.0 || x.is_sign_negative() {
            write!(f, "-")?;
        }
        let m = x.abs();
        // shortest round-trip digits either way
        if m == 0.0 || (1e-5..1e16).contains(&m) {
            write!(f, "{}", m)
        } else {
            write!(f, "{:e}", m)
        }
    } else if x.is_nan() {
        write!(f, "(0/0)")
    } else if x > 0.0 {
        write!(f, "(1/0)")
    } else {
        write!(f, "(-1/0)")
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &ScalarExpr, min_prec: u8) -> fmt::Result {
    if precedence(child.node()) < min_prec {
        write!(f, "({})", child)
    } else {
        write!(f, "{}", child)
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Num(x) => write_number(f, *x),
            Node::Pi => write!(f, "pi"),
            Node::Coord(a) => write!(f, "u{}", a.index() + 1),
            Node::Neg(a) => {
                write!(f, "-")?;
                write_child(f, a, 3)
            }
            Node::Add(a, b) => {
                write_child(f, a, 1)?;
                write!(f, " + ")?;
                write_child(f, b, 2)
            }
            Node::Sub(a, b) => {
                write_child(f, a, 1)?;
                write!(f, " - ")?;
                write_child(f, b, 2)
            }
            Node::Mul(a, b) => {
                write_child(f, a, 2)?;
                write!(f, "*")?;
                write_child(f, b, 3)
            }
            Node::Div(a, b) => {
                write_child(f, a, 2)?;
                write!(f, "/")?;
                write_child(f, b, 3)
            }
            Node::Pow(a, e) => {
                write_child(f, a, 5)?;
                write!(f, "^")?;
                if *e < 0.0 {
                    write!(f, "(")?;
                    write_number(f, *e)?;
                    write!(f, ")")
                } else {
                    write_number(f, *e)
                }
            }
            Node::Call(func, a) => write!(f, "{}({})", func.name(), a),
        }
    }
}

impl fmt::Debug for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarExpr({})", self)
    }
}

/// Display helper that truncates very long renderings.
pub(crate) fn short_display(e: &ScalarExpr) -> String {
    const LIMIT: usize = 160;
    if e.tree_size() > 400 {
        return format!("<expression with {} nodes>", e.dag_size());
    }
    let s = e.to_string();
    if s.len() > LIMIT {
        let mut cut = LIMIT;
        while !s.is_char_boundary(cut) {
            cut -= 1;
        }
        format!("{}...", &s[..cut])
    } else {
        s
    }
}

impl serde::Serialize for ScalarExpr {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for ScalarExpr {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_expr(&text).map_err(serde::de::Error::custom)
    }
}
