use std::collections::HashMap;

use super::{Axis, Func, Node, ScalarExpr};

/// Symbolic differentiation with a memo table keyed by node identity.
///
/// Reusing one `Differentiator` across related derivatives (all second
/// partials of a metric, say) lets them share intermediate results. The table
/// keeps every key alive, so node addresses are never recycled while cached.
#[derive(Default)]
pub struct Differentiator {
    memo: HashMap<(usize, Axis), (ScalarExpr, ScalarExpr)>,
}

impl Differentiator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn derive(&mut self, e: &ScalarExpr, axis: Axis) -> ScalarExpr {
        let key = (e.ptr_id(), axis);
        if let Some((_, d)) = self.memo.get(&key) {
            return d.clone();
        }
        let d = self.derive_uncached(e, axis);
        self.memo.insert(key, (e.clone(), d.clone()));
        d
    }

    /// Directional derivative `sum_i v^i * d/du_i (e)`.
    pub fn directional(&mut self, e: &ScalarExpr, v: &[ScalarExpr; 3]) -> ScalarExpr {
        let mut acc = ScalarExpr::zero();
        for axis in Axis::ALL {
            let term = v[axis.index()].mul(&self.derive(e, axis));
            acc = acc.add(&term);
        }
        acc
    }

    pub fn len(&self) -> usize {
        self.memo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.memo.is_empty()
    }

    fn derive_uncached(&mut self, e: &ScalarExpr, axis: Axis) -> ScalarExpr {
        match e.node() {
            Node::Num(_) | Node::Pi => ScalarExpr::zero(),
            Node::Coord(a) => {
                if *a == axis {
                    ScalarExpr::one()
                } else {
                    ScalarExpr::zero()
                }
            }
            Node::Neg(a) => self.derive(a, axis).neg(),
            Node::Add(a, b) => {
                let (da, db) = (self.derive(a, axis), self.derive(b, axis));
                da.add(&db)
            }
            Node::Sub(a, b) => {
                let (da, db) = (self.derive(a, axis), self.derive(b, axis));
                da.sub(&db)
            }
            Node::Mul(a, b) => {
                let (da, db) = (self.derive(a, axis), self.derive(b, axis));
                da.mul(b).add(&a.mul(&db))
            }
            Node::Div(a, b) => {
                let (da, db) = (self.derive(a, axis), self.derive(b, axis));
                if db.is_zero() {
                    da.div(b)
                } else {
                    da.div(b).sub(&a.mul(&db).div(&b.mul(b)))
                }
            }
            Node::Pow(a, k) => {
                let da = self.derive(a, axis);
                if da.is_zero() {
                    return ScalarExpr::zero();
                }
                ScalarExpr::num(*k).mul(&a.powf(k - 1.0)).mul(&da)
            }
            Node::Call(func, a) => {
                let da = self.derive(a, axis);
                if da.is_zero() {
                    return ScalarExpr::zero();
                }
                let outer = match func {
                    Func::Sin => a.cos(),
                    Func::Cos => a.sin().neg(),
                    Func::Tan => ScalarExpr::one().div(&a.cos().square()),
                    Func::Exp => e.clone(),
                    Func::Log => return da.div(a),
                    Func::Sqrt => return da.div(&e.scale(2.0)),
                    Func::Sinh => a.cosh(),
                    Func::Cosh => a.sinh(),
                    Func::Tanh => ScalarExpr::one().sub(&e.square()),
                    Func::Atan => return da.div(&ScalarExpr::one().add(&a.square())),
                };
                outer.mul(&da)
            }
        }
    }
}
