use std::collections::HashMap;

use super::{short_display, EvalError, Func, Node, Point, ScalarExpr};

#[derive(Debug, Clone, Copy)]
enum Op {
    Const(f64),
    Coord(usize),
    Neg(u32),
    Add(u32, u32),
    Sub(u32, u32),
    Mul(u32, u32),
    Div(u32, u32),
    Pow(u32, f64),
    Call(Func, u32),
}

#[derive(Hash, PartialEq, Eq)]
enum Key {
    Const(u64),
    Coord(usize),
    Neg(u32),
    Add(u32, u32),
    Sub(u32, u32),
    Mul(u32, u32),
    Div(u32, u32),
    Pow(u32, u64),
    Call(Func, u32),
}

/// Straight-line program evaluating a batch of expressions at once.
///
/// Compilation walks each distinct node once and merges structurally equal
/// sub-expressions, so independently built copies of the same term are
/// evaluated a single time per point.
#[derive(Debug, Clone)]
pub struct Tape {
    ops: Vec<Op>,
    outputs: Vec<u32>,
    // source node per slot, for error messages
    sources: Vec<ScalarExpr>,
}

impl Tape {
    pub fn compile(exprs: &[ScalarExpr]) -> Tape {
        let mut ops = Vec::new();
        let mut sources = Vec::new();
        let mut by_ptr: HashMap<usize, u32> = HashMap::new();
        let mut by_key: HashMap<Key, u32> = HashMap::new();
        let mut outputs = Vec::with_capacity(exprs.len());

        for root in exprs {
            // iterative post-order; deep DAGs would overflow small thread stacks
            let mut stack: Vec<(ScalarExpr, bool)> = vec![(root.clone(), false)];
            while let Some((e, expanded)) = stack.pop() {
                if by_ptr.contains_key(&e.ptr_id()) {
                    continue;
                }
                if !expanded {
                    stack.push((e.clone(), true));
                    match e.node() {
                        Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => {
                            stack.push((a.clone(), false));
                        }
                        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                            stack.push((b.clone(), false));
                            stack.push((a.clone(), false));
                        }
                        _ => {}
                    }
                    continue;
                }
                let id = |x: &ScalarExpr| by_ptr[&x.ptr_id()];
                let (key, op) = match e.node() {
                    Node::Num(x) => (Key::Const(x.to_bits()), Op::Const(*x)),
                    Node::Pi => (Key::Const(std::f64::consts::PI.to_bits()), Op::Const(std::f64::consts::PI)),
                    Node::Coord(a) => (Key::Coord(a.index()), Op::Coord(a.index())),
                    Node::Neg(a) => (Key::Neg(id(a)), Op::Neg(id(a))),
                    Node::Add(a, b) => {
                        let (x, y) = (id(a), id(b));
                        let (lo, hi) = (x.min(y), x.max(y));
                        (Key::Add(lo, hi), Op::Add(x, y))
                    }
                    Node::Sub(a, b) => (Key::Sub(id(a), id(b)), Op::Sub(id(a), id(b))),
                    Node::Mul(a, b) => {
                        let (x, y) = (id(a), id(b));
                        let (lo, hi) = (x.min(y), x.max(y));
                        (Key::Mul(lo, hi), Op::Mul(x, y))
                    }
                    Node::Div(a, b) => (Key::Div(id(a), id(b)), Op::Div(id(a), id(b))),
                    Node::Pow(a, k) => (Key::Pow(id(a), k.to_bits()), Op::Pow(id(a), *k)),
                    Node::Call(f, a) => (Key::Call(*f, id(a)), Op::Call(*f, id(a))),
                };
                let slot = *by_key.entry(key).or_insert_with(|| {
                    ops.push(op);
                    sources.push(e.clone());
                    (ops.len() - 1) as u32
                });
                by_ptr.insert(e.ptr_id(), slot);
            }
            outputs.push(by_ptr[&root.ptr_id()]);
        }
        Tape { ops, outputs, sources }
    }

    /// Number of instructions.
    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn eval(&self, p: &Point) -> Result<Vec<f64>, EvalError> {
        let mut regs = vec![0.0; self.ops.len()];
        let mut out = vec![0.0; self.outputs.len()];
        self.eval_with(p, &mut regs, &mut out)?;
        Ok(out)
    }

    /// Evaluates into caller-provided buffers; `regs` is resized as needed.
    pub fn eval_with(&self, p: &Point, regs: &mut Vec<f64>, out: &mut [f64]) -> Result<(), EvalError> {
        regs.resize(self.ops.len(), 0.0);
        for (i, op) in self.ops.iter().enumerate() {
            let r = |k: u32| regs[k as usize];
            let v = match *op {
                Op::Const(x) => x,
                Op::Coord(a) => p.0[a],
                Op::Neg(a) => -r(a),
                Op::Add(a, b) => r(a) + r(b),
                Op::Sub(a, b) => r(a) - r(b),
                Op::Mul(a, b) => r(a) * r(b),
                Op::Div(a, b) => {
                    let d = r(b);
                    if d == 0.0 {
                        return Err(EvalError::DivisionByZero { subexpr: short_display(&self.sources[i]) });
                    }
                    r(a) / d
                }
                Op::Pow(a, k) => {
                    let base = r(a);
                    let bad = (base < 0.0 && k.fract() != 0.0) || (base == 0.0 && k < 0.0);
                    if bad {
                        return Err(EvalError::Domain {
                            func: "pow".into(),
                            value: base,
                            subexpr: short_display(&self.sources[i]),
                        });
                    }
                    if k == 2.0 {
                        base * base
                    } else if k.fract() == 0.0 && k.abs() <= 64.0 {
                        base.powi(k as i32)
                    } else {
                        base.powf(k)
                    }
                }
                Op::Call(f, a) => {
                    let x = r(a);
                    match f.apply(x) {
                        Some(v) => v,
                        None => {
                            return Err(EvalError::Domain {
                                func: f.name().into(),
                                value: x,
                                subexpr: short_display(&self.sources[i]),
                            })
                        }
                    }
                }
            };
            regs[i] = v;
        }
        for (o, &slot) in out.iter_mut().zip(&self.outputs) {
            *o = regs[slot as usize];
        }
        Ok(())
    }
}
