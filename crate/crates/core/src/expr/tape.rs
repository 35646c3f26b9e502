use std::collections::HashMap;

use thiserror::Error;

use super::{BinOp, Expr, Func, Kind, Point};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error in `{op}` at argument {arg}: subexpression {node}")]
    Domain {
        op: &'static str,
        arg: f64,
        node: String,
    },
}

#[derive(Clone, Copy, Debug)]
enum Op {
    Const(f64),
    Var(u8),
    Neg(u32),
    Func(Func, u32),
    Bin(BinOp, u32, u32),
    Pow(u32, f64),
}

#[derive(PartialEq, Eq, Hash)]
enum Key {
    Const(u64),
    Var(u8),
    Neg(u32),
    Func(Func, u32),
    Bin(BinOp, u32, u32),
    Pow(u32, u64),
}

/// A straight-line program evaluating one or more expressions.
///
/// Compilation deduplicates shared DAG nodes by address and structurally
/// identical nodes by hash-consing, so derivative trees built independently
/// from the same parents collapse to one instruction stream.
#[derive(Clone)]
pub struct Tape {
    ops: Vec<Op>,
    origin: Vec<Expr>,
    outputs: Vec<u32>,
}

impl Tape {
    pub fn compile(exprs: &[Expr]) -> Tape {
        let mut ops = Vec::new();
        let mut origin = Vec::new();
        let mut by_addr: HashMap<usize, u32> = HashMap::new();
        let mut by_key: HashMap<Key, u32> = HashMap::new();
        let mut outputs = Vec::with_capacity(exprs.len());

        for root in exprs {
            // Iterative post-order: (node, children_pushed).
            let mut stack = vec![(root.clone(), false)];
            while let Some((e, expanded)) = stack.pop() {
                if by_addr.contains_key(&e.addr()) {
                    continue;
                }
                if !expanded {
                    stack.push((e.clone(), true));
                    match e.kind() {
                        Kind::Const(_) | Kind::Var(_) => {}
                        Kind::Neg(a) | Kind::Func(_, a) | Kind::Pow(a, _) => {
                            stack.push((a.clone(), false))
                        }
                        Kind::Binary(_, a, b) => {
                            stack.push((b.clone(), false));
                            stack.push((a.clone(), false));
                        }
                    }
                    continue;
                }
                let idx = |x: &Expr| by_addr[&x.addr()];
                let (op, key) = match e.kind() {
                    Kind::Const(c) => (Op::Const(*c), Key::Const(c.to_bits())),
                    Kind::Var(v) => (Op::Var(v.index() as u8), Key::Var(v.index() as u8)),
                    Kind::Neg(a) => (Op::Neg(idx(a)), Key::Neg(idx(a))),
                    Kind::Func(f, a) => (Op::Func(*f, idx(a)), Key::Func(*f, idx(a))),
                    Kind::Pow(a, p) => (Op::Pow(idx(a), *p), Key::Pow(idx(a), p.to_bits())),
                    Kind::Binary(o, a, b) => {
                        (Op::Bin(*o, idx(a), idx(b)), Key::Bin(*o, idx(a), idx(b)))
                    }
                };
                let slot = *by_key.entry(key).or_insert_with(|| {
                    ops.push(op);
                    origin.push(e.clone());
                    (ops.len() - 1) as u32
                });
                by_addr.insert(e.addr(), slot);
            }
            outputs.push(by_addr[&root.addr()]);
        }
        Tape {
            ops,
            origin,
            outputs,
        }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }

    /// Evaluates all outputs, reusing `scratch` between calls.
    pub fn eval_with(
        &self,
        p: &Point,
        scratch: &mut Vec<f64>,
        out: &mut [f64],
    ) -> Result<(), EvalError> {
        scratch.clear();
        scratch.reserve(self.ops.len());
        let coords = [p.x[0], p.x[1], p.x[2], p.t];
        for (i, op) in self.ops.iter().enumerate() {
            let v = match *op {
                Op::Const(c) => c,
                Op::Var(k) => coords[k as usize],
                Op::Neg(a) => -scratch[a as usize],
                Op::Func(f, a) => {
                    let x = scratch[a as usize];
                    match f.apply(x) {
                        Some(v) => v,
                        None => return Err(self.domain(f.name(), x, i)),
                    }
                }
                Op::Pow(a, q) => scratch[a as usize].powf(q),
                Op::Bin(o, a, b) => {
                    let (x, y) = (scratch[a as usize], scratch[b as usize]);
                    match o {
                        BinOp::Add => x + y,
                        BinOp::Sub => x - y,
                        BinOp::Mul => x * y,
                        BinOp::Div => {
                            if y == 0.0 {
                                return Err(self.domain("/", y, i));
                            }
                            x / y
                        }
                    }
                }
            };
            scratch.push(v);
        }
        for (o, &k) in out.iter_mut().zip(&self.outputs) {
            *o = scratch[k as usize];
        }
        Ok(())
    }

    pub fn eval(&self, p: &Point) -> Result<Vec<f64>, EvalError> {
        let mut scratch = Vec::new();
        let mut out = vec![0.0; self.outputs.len()];
        self.eval_with(p, &mut scratch, &mut out)?;
        Ok(out)
    }

    pub fn eval_scalar(&self, p: &Point) -> Result<f64, EvalError> {
        Ok(self.eval(p)?[0])
    }

    fn domain(&self, op: &'static str, arg: f64, at: usize) -> EvalError {
        let mut node = self.origin[at].to_string();
        if node.len() > 200 {
            node.truncate(200);
            node.push_str("...");
        }
        EvalError::Domain { op, arg, node }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, Var};

    #[test]
    fn structurally_equal_subtrees_share_slots() {
        let a = parse("sin(x1)*x2").unwrap();
        let b = parse("sin(x1)*x2").unwrap();
        let tape = Tape::compile(&[a, b]);
        // x1, sin, x2, mul
        assert_eq!(tape.len(), 4);
    }

    #[test]
    fn domain_errors_name_the_node() {
        let e = parse("log(x1 - 1)").unwrap();
        let err = e.eval(&Point::new(0.5, 0.0, 0.0, 0.0)).unwrap_err();
        let EvalError::Domain { op, node, .. } = err;
        assert_eq!(op, "log");
        assert!(node.contains("log"));
        let e = parse("1/x2").unwrap();
        assert!(e.eval(&Point::new(0.0, 0.0, 0.0, 0.0)).is_err());
        assert!(parse("sqrt(x1)").unwrap().eval(&Point::new(-1.0, 0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn multiple_outputs() {
        let f = parse("x1*x2*x3").unwrap();
        let grads: Vec<_> = Var::SPACE.iter().map(|&v| f.derivative(v)).collect();
        let tape = Tape::compile(&grads);
        let out = tape.eval(&Point::new(1.0, 2.0, 3.0, 0.0)).unwrap();
        assert_eq!(out, vec![6.0, 3.0, 2.0]);
    }
}
