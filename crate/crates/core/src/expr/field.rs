use super::{sum, Expr, Point, Tape, EvalError};

/// Three scalar components.
#[derive(Clone, Debug)]
pub struct VectorField {
    pub c: [Expr; 3],
}

/// A 3x3 array of scalar components, row-major.
#[derive(Clone, Debug)]
pub struct TensorField {
    pub c: [[Expr; 3]; 3],
}

impl VectorField {
    pub fn new(c1: Expr, c2: Expr, c3: Expr) -> Self {
        VectorField { c: [c1, c2, c3] }
    }

    pub fn from_fn(f: impl Fn(usize) -> Expr) -> Self {
        VectorField {
            c: [f(0), f(1), f(2)],
        }
    }

    pub fn zero() -> Self {
        VectorField::from_fn(|_| Expr::zero())
    }

    /// The position field `x`.
    pub fn position() -> Self {
        VectorField::new(Expr::x1(), Expr::x2(), Expr::x3())
    }

    pub fn parse(srcs: [&str; 3]) -> Result<Self, super::ParseError> {
        Ok(VectorField::new(
            super::parse(srcs[0])?,
            super::parse(srcs[1])?,
            super::parse(srcs[2])?,
        ))
    }

    pub fn dot(&self, o: &VectorField) -> Expr {
        sum((0..3).map(|i| &self.c[i] * &o.c[i]))
    }

    pub fn norm_sq(&self) -> Expr {
        self.dot(self)
    }

    pub fn scale(&self, s: &Expr) -> VectorField {
        VectorField::from_fn(|i| &self.c[i] * s)
    }

    pub fn add(&self, o: &VectorField) -> VectorField {
        VectorField::from_fn(|i| &self.c[i] + &o.c[i])
    }

    pub fn sub(&self, o: &VectorField) -> VectorField {
        VectorField::from_fn(|i| &self.c[i] - &o.c[i])
    }

    pub fn neg(&self) -> VectorField {
        VectorField::from_fn(|i| -&self.c[i])
    }

    pub fn cross(&self, o: &VectorField) -> VectorField {
        let a = &self.c;
        let b = &o.c;
        VectorField::new(
            &a[1] * &b[2] - &a[2] * &b[1],
            &a[2] * &b[0] - &a[0] * &b[2],
            &a[0] * &b[1] - &a[1] * &b[0],
        )
    }

    pub fn outer(&self, o: &VectorField) -> TensorField {
        TensorField::from_fn(|i, j| &self.c[i] * &o.c[j])
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> VectorField {
        VectorField::from_fn(|i| f(&self.c[i]))
    }

    pub fn substitute(&self, subs: &[Option<Expr>; 4]) -> VectorField {
        self.map(|e| e.substitute(subs))
    }

    pub fn to_vec(&self) -> Vec<Expr> {
        self.c.to_vec()
    }

    pub fn eval(&self, p: &Point) -> Result<[f64; 3], EvalError> {
        let v = Tape::compile(&self.c).eval(p)?;
        Ok([v[0], v[1], v[2]])
    }
}

impl TensorField {
    pub fn from_fn(f: impl Fn(usize, usize) -> Expr) -> Self {
        TensorField {
            c: [
                [f(0, 0), f(0, 1), f(0, 2)],
                [f(1, 0), f(1, 1), f(1, 2)],
                [f(2, 0), f(2, 1), f(2, 2)],
            ],
        }
    }

    pub fn zero() -> Self {
        TensorField::from_fn(|_, _| Expr::zero())
    }

    pub fn identity() -> Self {
        TensorField::from_fn(|i, j| if i == j { Expr::one() } else { Expr::zero() })
    }

    pub fn transpose(&self) -> TensorField {
        TensorField::from_fn(|i, j| self.c[j][i].clone())
    }

    pub fn sym(&self) -> TensorField {
        TensorField::from_fn(|i, j| (&self.c[i][j] + &self.c[j][i]) * 0.5)
    }

    pub fn add(&self, o: &TensorField) -> TensorField {
        TensorField::from_fn(|i, j| &self.c[i][j] + &o.c[i][j])
    }

    pub fn sub(&self, o: &TensorField) -> TensorField {
        TensorField::from_fn(|i, j| &self.c[i][j] - &o.c[i][j])
    }

    pub fn scale(&self, s: &Expr) -> TensorField {
        TensorField::from_fn(|i, j| &self.c[i][j] * s)
    }

    pub fn matmul(&self, o: &TensorField) -> TensorField {
        TensorField::from_fn(|i, j| sum((0..3).map(|k| &self.c[i][k] * &o.c[k][j])))
    }

    pub fn apply(&self, v: &VectorField) -> VectorField {
        VectorField::from_fn(|i| sum((0..3).map(|j| &self.c[i][j] * &v.c[j])))
    }

    pub fn frobenius(&self, o: &TensorField) -> Expr {
        sum((0..9).map(|k| &self.c[k / 3][k % 3] * &o.c[k / 3][k % 3]))
    }

    pub fn trace(&self) -> Expr {
        sum((0..3).map(|i| self.c[i][i].clone()))
    }

    pub fn to_vec(&self) -> Vec<Expr> {
        self.c.iter().flatten().cloned().collect()
    }

    pub fn eval(&self, p: &Point) -> Result<[[f64; 3]; 3], EvalError> {
        let v = Tape::compile(&self.to_vec()).eval(p)?;
        Ok(std::array::from_fn(|i| std::array::from_fn(|j| v[3 * i + j])))
    }
}
