//! Expression trees over `(x1, x2, x3, t)` with exact symbolic differentiation.
//!
//! Expressions are immutable DAGs behind [`Arc`]. Every node caches its four
//! partial derivatives, so repeated differentiation of shared subtrees stays
//! linear in the DAG size. Evaluation goes through a compiled [`Tape`], which
//! hash-conses structurally identical subexpressions.

mod field;
mod parse;
mod tape;

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

pub use field::{TensorField, VectorField};
pub use parse::{parse, parse_with_vars, ParseError};
pub use tape::{EvalError, Tape};

/// Scalar fields are plain expressions.
pub type ScalarField = Expr;

/// Independent variables. The discriminant is the slot index in a [`Point`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    X1 = 0,
    X2 = 1,
    X3 = 2,
    T = 3,
}

impl Var {
    pub const ALL: [Var; 4] = [Var::X1, Var::X2, Var::X3, Var::T];
    pub const SPACE: [Var; 3] = [Var::X1, Var::X2, Var::X3];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Var::X1 => "x1",
            Var::X2 => "x2",
            Var::X3 => "x3",
            Var::T => "t",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Tanh,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Tanh => "tanh",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "tanh" => Func::Tanh,
            _ => return None,
        })
    }

    /// Applies the function, returning `None` outside its real domain.
    pub fn apply(self, x: f64) -> Option<f64> {
        match self {
            Func::Sin => Some(x.sin()),
            Func::Cos => Some(x.cos()),
            Func::Exp => Some(x.exp()),
            Func::Tanh => Some(x.tanh()),
            Func::Log => (x > 0.0).then(|| x.ln()),
            Func::Sqrt => (x >= 0.0).then(|| x.sqrt()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }
}

/// Node payload.
#[derive(Debug)]
pub enum Kind {
    Const(f64),
    Var(Var),
    Neg(Expr),
    Func(Func, Expr),
    Binary(BinOp, Expr, Expr),
    /// Power with a constant exponent.
    Pow(Expr, f64),
}

struct Node {
    kind: Kind,
    derivs: [OnceLock<Expr>; 4],
}

/// A point in space-time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub x: [f64; 3],
    pub t: f64,
}

impl Point {
    pub fn new(x1: f64, x2: f64, x3: f64, t: f64) -> Self {
        Point { x: [x1, x2, x3], t }
    }

    pub fn at(x: [f64; 3], t: f64) -> Self {
        Point { x, t }
    }

    pub fn coord(&self, v: Var) -> f64 {
        match v {
            Var::T => self.t,
            _ => self.x[v.index()],
        }
    }
}

#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl Expr {
    fn from_kind(kind: Kind) -> Expr {
        Expr(Arc::new(Node {
            kind,
            derivs: Default::default(),
        }))
    }

    pub fn kind(&self) -> &Kind {
        &self.0.kind
    }

    pub fn constant(c: f64) -> Expr {
        Expr::from_kind(Kind::Const(c))
    }

    pub fn zero() -> Expr {
        Expr::constant(0.0)
    }

    pub fn one() -> Expr {
        Expr::constant(1.0)
    }

    pub fn var(v: Var) -> Expr {
        Expr::from_kind(Kind::Var(v))
    }

    pub fn x1() -> Expr {
        Expr::var(Var::X1)
    }

    pub fn x2() -> Expr {
        Expr::var(Var::X2)
    }

    pub fn x3() -> Expr {
        Expr::var(Var::X3)
    }

    pub fn t() -> Expr {
        Expr::var(Var::T)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self.kind() {
            Kind::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    pub fn ptr_eq(&self, other: &Expr) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    fn addr(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn neg(&self) -> Expr {
        match self.kind() {
            Kind::Const(c) => Expr::constant(-c),
            Kind::Neg(inner) => inner.clone(),
            _ => Expr::from_kind(Kind::Neg(self.clone())),
        }
    }

    pub fn apply(&self, f: Func) -> Expr {
        if let Some(c) = self.as_const() {
            if let Some(v) = f.apply(c).filter(|v| v.is_finite()) {
                return Expr::constant(v);
            }
        }
        Expr::from_kind(Kind::Func(f, self.clone()))
    }

    pub fn sin(&self) -> Expr {
        self.apply(Func::Sin)
    }

    pub fn cos(&self) -> Expr {
        self.apply(Func::Cos)
    }

    pub fn exp(&self) -> Expr {
        self.apply(Func::Exp)
    }

    pub fn ln(&self) -> Expr {
        self.apply(Func::Log)
    }

    pub fn sqrt(&self) -> Expr {
        self.apply(Func::Sqrt)
    }

    pub fn tanh(&self) -> Expr {
        self.apply(Func::Tanh)
    }

    pub fn powf(&self, p: f64) -> Expr {
        if p == 0.0 {
            return Expr::one();
        }
        if p == 1.0 {
            return self.clone();
        }
        if let Some(c) = self.as_const() {
            let v = c.powf(p);
            if v.is_finite() {
                return Expr::constant(v);
            }
        }
        Expr::from_kind(Kind::Pow(self.clone(), p))
    }

    pub fn square(&self) -> Expr {
        self.powf(2.0)
    }

    pub fn recip(&self) -> Expr {
        Expr::one().div_expr(self)
    }

    fn binary(op: BinOp, a: &Expr, b: &Expr) -> Expr {
        if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
            let v = match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => x / y,
            };
            if v.is_finite() {
                return Expr::constant(v);
            }
        }
        match op {
            BinOp::Add => {
                if a.is_zero() {
                    return b.clone();
                }
                if b.is_zero() {
                    return a.clone();
                }
            }
            BinOp::Sub => {
                if b.is_zero() {
                    return a.clone();
                }
                if a.is_zero() {
                    return b.neg();
                }
            }
            BinOp::Mul => {
                if a.is_zero() || b.is_zero() {
                    return Expr::zero();
                }
                if a.is_one() {
                    return b.clone();
                }
                if b.is_one() {
                    return a.clone();
                }
                if a.as_const() == Some(-1.0) {
                    return b.neg();
                }
                if b.as_const() == Some(-1.0) {
                    return a.neg();
                }
            }
            BinOp::Div => {
                if a.is_zero() && !b.is_zero() {
                    return Expr::zero();
                }
                if b.is_one() {
                    return a.clone();
                }
            }
        }
        Expr::from_kind(Kind::Binary(op, a.clone(), b.clone()))
    }

    pub fn add_expr(&self, rhs: &Expr) -> Expr {
        Expr::binary(BinOp::Add, self, rhs)
    }

    pub fn sub_expr(&self, rhs: &Expr) -> Expr {
        Expr::binary(BinOp::Sub, self, rhs)
    }

    pub fn mul_expr(&self, rhs: &Expr) -> Expr {
        Expr::binary(BinOp::Mul, self, rhs)
    }

    pub fn div_expr(&self, rhs: &Expr) -> Expr {
        Expr::binary(BinOp::Div, self, rhs)
    }

    /// Exact partial derivative with respect to `v`.
    pub fn derivative(&self, v: Var) -> Expr {
        self.0.derivs[v.index()]
            .get_or_init(|| self.compute_derivative(v))
            .clone()
    }

    /// Shorthand for `derivative`.
    pub fn d(&self, v: Var) -> Expr {
        self.derivative(v)
    }

    fn compute_derivative(&self, v: Var) -> Expr {
        match self.kind() {
            Kind::Const(_) => Expr::zero(),
            Kind::Var(w) => {
                if *w == v {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Kind::Neg(a) => a.derivative(v).neg(),
            Kind::Binary(op, a, b) => {
                let da = a.derivative(v);
                let db = b.derivative(v);
                match op {
                    BinOp::Add => da.add_expr(&db),
                    BinOp::Sub => da.sub_expr(&db),
                    BinOp::Mul => a.mul_expr(&db).add_expr(&da.mul_expr(b)),
                    BinOp::Div => {
                        if db.is_zero() {
                            da.div_expr(b)
                        } else {
                            da.mul_expr(b)
                                .sub_expr(&a.mul_expr(&db))
                                .div_expr(&b.mul_expr(b))
                        }
                    }
                }
            }
            Kind::Pow(a, p) => {
                let da = a.derivative(v);
                if da.is_zero() {
                    return Expr::zero();
                }
                Expr::constant(*p).mul_expr(&a.powf(p - 1.0)).mul_expr(&da)
            }
            Kind::Func(f, a) => {
                let da = a.derivative(v);
                if da.is_zero() {
                    return Expr::zero();
                }
                let outer = match f {
                    Func::Sin => a.cos(),
                    Func::Cos => a.sin().neg(),
                    Func::Exp => self.clone(),
                    Func::Log => return da.div_expr(a),
                    Func::Sqrt => {
                        return da.div_expr(&Expr::constant(2.0).mul_expr(self));
                    }
                    Func::Tanh => Expr::one().sub_expr(&self.square()),
                };
                outer.mul_expr(&da)
            }
        }
    }

    /// Replaces variables by expressions. `None` leaves a variable untouched.
    pub fn substitute(&self, subs: &[Option<Expr>; 4]) -> Expr {
        let mut memo = HashMap::new();
        self.substitute_memo(subs, &mut memo)
    }

    fn substitute_memo(&self, subs: &[Option<Expr>; 4], memo: &mut HashMap<usize, Expr>) -> Expr {
        if let Some(e) = memo.get(&self.addr()) {
            return e.clone();
        }
        let out = match self.kind() {
            Kind::Const(_) => self.clone(),
            Kind::Var(v) => subs[v.index()].clone().unwrap_or_else(|| self.clone()),
            Kind::Neg(a) => a.substitute_memo(subs, memo).neg(),
            Kind::Func(f, a) => a.substitute_memo(subs, memo).apply(*f),
            Kind::Pow(a, p) => a.substitute_memo(subs, memo).powf(*p),
            Kind::Binary(op, a, b) => {
                let a = a.substitute_memo(subs, memo);
                let b = b.substitute_memo(subs, memo);
                Expr::binary(*op, &a, &b)
            }
        };
        memo.insert(self.addr(), out.clone());
        out
    }

    /// Replaces `t` by a constant.
    pub fn at_time(&self, t: f64) -> Expr {
        self.substitute(&[None, None, None, Some(Expr::constant(t))])
    }

    /// Evaluates once. Use [`Tape`] for repeated evaluation.
    pub fn eval(&self, p: &Point) -> Result<f64, EvalError> {
        Tape::compile(std::slice::from_ref(self)).eval_scalar(p)
    }

    pub fn depends_on(&self, v: Var) -> bool {
        let mut seen = HashMap::new();
        self.depends_memo(v, &mut seen)
    }

    fn depends_memo(&self, v: Var, seen: &mut HashMap<usize, bool>) -> bool {
        if let Some(r) = seen.get(&self.addr()) {
            return *r;
        }
        let r = match self.kind() {
            Kind::Const(_) => false,
            Kind::Var(w) => *w == v,
            Kind::Neg(a) | Kind::Func(_, a) | Kind::Pow(a, _) => a.depends_memo(v, seen),
            Kind::Binary(_, a, b) => a.depends_memo(v, seen) || b.depends_memo(v, seen),
        };
        seen.insert(self.addr(), r);
        r
    }

    /// Number of distinct nodes in the DAG.
    pub fn dag_size(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![self.clone()];
        while let Some(e) = stack.pop() {
            if !seen.insert(e.addr()) {
                continue;
            }
            match e.kind() {
                Kind::Const(_) | Kind::Var(_) => {}
                Kind::Neg(a) | Kind::Func(_, a) | Kind::Pow(a, _) => stack.push(a.clone()),
                Kind::Binary(_, a, b) => {
                    stack.push(a.clone());
                    stack.push(b.clone());
                }
            }
        }
        seen.len()
    }
}

impl PartialEq for Expr {
    /// Structural equality.
    fn eq(&self, other: &Expr) -> bool {
        if self.ptr_eq(other) {
            return true;
        }
        match (self.kind(), other.kind()) {
            (Kind::Const(a), Kind::Const(b)) => a.to_bits() == b.to_bits(),
            (Kind::Var(a), Kind::Var(b)) => a == b,
            (Kind::Neg(a), Kind::Neg(b)) => a == b,
            (Kind::Func(f, a), Kind::Func(g, b)) => f == g && a == b,
            (Kind::Pow(a, p), Kind::Pow(b, q)) => p.to_bits() == q.to_bits() && a == b,
            (Kind::Binary(o1, a1, b1), Kind::Binary(o2, a2, b2)) => o1 == o2 && a1 == a2 && b1 == b2,
            _ => false,
        }
    }
}

fn fmt_number(c: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if c < 0.0 || (c == 0.0 && c.is_sign_negative()) {
        write!(f, "(-{})", -c)
    } else {
        write!(f, "{c}")
    }
}

impl fmt::Display for Expr {
    /// Fully parenthesized form accepted by [`parse`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            Kind::Const(c) => fmt_number(*c, f),
            Kind::Var(v) => f.write_str(v.name()),
            Kind::Neg(a) => write!(f, "(-{a})"),
            Kind::Func(g, a) => write!(f, "{}({a})", g.name()),
            Kind::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Kind::Pow(a, p) => {
                if *p < 0.0 {
                    write!(f, "(1 / ({a})^{})", -p)
                } else {
                    write!(f, "({a})^{p}")
                }
            }
        }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl From<f64> for Expr {
    fn from(c: f64) -> Expr {
        Expr::constant(c)
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $inner:ident) => {
        impl std::ops::$trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                self.$inner(&rhs)
            }
        }
        impl std::ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                self.$inner(rhs)
            }
        }
        impl std::ops::$trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                self.$inner(&rhs)
            }
        }
        impl std::ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                self.$inner(rhs)
            }
        }
        impl std::ops::$trait<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                self.$inner(&Expr::constant(rhs))
            }
        }
        impl std::ops::$trait<f64> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                self.$inner(&Expr::constant(rhs))
            }
        }
        impl std::ops::$trait<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::constant(self).$inner(&rhs)
            }
        }
        impl std::ops::$trait<&Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::constant(self).$inner(rhs)
            }
        }
    };
}

impl_binop!(Add, add, add_expr);
impl_binop!(Sub, sub, sub_expr);
impl_binop!(Mul, mul, mul_expr);
impl_binop!(Div, div, div_expr);

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(&self)
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

/// Sum of an iterator of expressions, folding zeros.
pub fn sum<I: IntoIterator<Item = Expr>>(items: I) -> Expr {
    items.into_iter().fold(Expr::zero(), |acc, e| acc + e)
}
