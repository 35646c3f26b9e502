//! Bulk and tangential differential operators on expression fields.
//!
//! Tangential derivatives are projections of ambient derivatives,
//! `d^G_j f = d_j f - n_j (n . grad f)`, with `n` the chart's normal
//! extension. Everything here returns expressions, so nested operators such
//! as the surface divergence of a surface stress stay exact.
//!
//! Matrix convention: `[grad v]_ij = d_j v_i`; tensor divergence is row-wise,
//! `(div T)_i = sum_j d_j T_ij`.

use crate::expr::{sum, Expr, Point, TensorField, Var, VectorField};
use crate::geometry::SurfaceChart;
use crate::numeric::Vec3;

pub fn grad(f: &Expr) -> VectorField {
    VectorField::from_fn(|i| f.derivative(Var::SPACE[i]))
}

pub fn div(v: &VectorField) -> Expr {
    sum((0..3).map(|i| v.c[i].derivative(Var::SPACE[i])))
}

pub fn laplacian(f: &Expr) -> Expr {
    div(&grad(f))
}

/// `[grad v]_ij = d_j v_i`.
pub fn jacobian(v: &VectorField) -> TensorField {
    TensorField::from_fn(|i, j| v.c[i].derivative(Var::SPACE[j]))
}

/// Directional derivative `(a . grad) f`.
pub fn directional(a: &VectorField, f: &Expr) -> Expr {
    a.dot(&grad(f))
}

/// `grad_G f = P grad f`.
pub fn tangential_grad(f: &Expr, chart: &SurfaceChart) -> VectorField {
    let g = grad(f);
    let n = chart.normal_field();
    let dn = n.dot(&g);
    g.sub(&n.scale(&dn))
}

/// `[grad_G v]_ij = d^G_j v_i`.
pub fn tangential_jacobian(v: &VectorField, chart: &SurfaceChart) -> TensorField {
    let rows: Vec<VectorField> = v.c.iter().map(|vi| tangential_grad(vi, chart)).collect();
    TensorField::from_fn(|i, j| rows[i].c[j].clone())
}

/// `div_G v = sum_j d^G_j v_j`.
pub fn surface_divergence(v: &VectorField, chart: &SurfaceChart) -> Expr {
    let n = chart.normal_field();
    let jac = jacobian(v);
    let nn = sum((0..3).flat_map(|i| {
        let jac = &jac;
        (0..3).map(move |j| &n.c[i] * &jac.c[i][j] * &n.c[j])
    }));
    div(v) - nn
}

pub fn strain_bulk(v: &VectorField) -> TensorField {
    jacobian(v).sym()
}

/// `D_G(v) = P sym(grad_G v) P`.
pub fn strain_surface(v: &VectorField, chart: &SurfaceChart) -> TensorField {
    let p = chart.projection_field();
    p.matmul(&tangential_jacobian(v, chart).sym()).matmul(p)
}

/// `P sym(grad v) P`, the ambient-gradient form of the surface strain.
pub fn strain_surface_ambient(v: &VectorField, chart: &SurfaceChart) -> TensorField {
    let p = chart.projection_field();
    p.matmul(&jacobian(v).sym()).matmul(p)
}

/// Component form
/// `2 D_ij = d^G_i v_j + d^G_j v_i - n_i (n . d^G_j v) - n_j (n . d^G_i v)`.
pub fn strain_surface_components(v: &VectorField, chart: &SurfaceChart) -> TensorField {
    let n = chart.normal_field();
    let tj = tangential_jacobian(v, chart);
    // n . d^G_j v = sum_k n_k [grad_G v]_kj
    let n_dj: Vec<Expr> = (0..3)
        .map(|j| sum((0..3).map(|k| &n.c[k] * &tj.c[k][j])))
        .collect();
    TensorField::from_fn(|i, j| {
        (&tj.c[j][i] + &tj.c[i][j] - &n.c[i] * &n_dj[j] - &n.c[j] * &n_dj[i]) * 0.5
    })
}

/// `D_t f = d_t f + (v . grad) f`.
pub fn material_derivative(f: &Expr, v: &VectorField) -> Expr {
    f.derivative(Var::T) + directional(v, f)
}

pub fn material_derivative_vector(w: &VectorField, v: &VectorField) -> VectorField {
    w.map(|c| material_derivative(c, v))
}

/// `D_t^N f = d_t f + (v_S . n)(n . grad) f`.
pub fn normal_time_derivative(f: &Expr, v_surface: &VectorField, chart: &SurfaceChart) -> Expr {
    let n = chart.normal_field();
    f.derivative(Var::T) + v_surface.dot(n) * directional(n, f)
}

pub fn normal_time_derivative_vector(
    w: &VectorField,
    v_surface: &VectorField,
    chart: &SurfaceChart,
) -> VectorField {
    w.map(|c| normal_time_derivative(c, v_surface, chart))
}

/// Row-wise bulk divergence.
pub fn div_tensor(t: &TensorField) -> VectorField {
    VectorField::from_fn(|i| sum((0..3).map(|j| t.c[i][j].derivative(Var::SPACE[j]))))
}

/// Row-wise surface divergence.
pub fn surface_div_tensor(t: &TensorField, chart: &SurfaceChart) -> VectorField {
    VectorField::from_fn(|i| {
        let row = VectorField::from_fn(|j| t.c[i][j].clone());
        surface_divergence(&row, chart)
    })
}

/// Evaluates a vector field at a point.
pub fn eval_vec(v: &VectorField, x: Vec3, t: f64) -> Result<Vec3, crate::expr::EvalError> {
    v.eval(&Point::at(x, t))
}
