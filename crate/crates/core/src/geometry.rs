//! Analytic moving geometries.
//!
//! A surface is star-shaped about the origin: `x(u, v, t) = R(w, t) w` with
//! `w = (sin u cos v, sin u sin v, cos u)`. The radial profile `R` is an
//! expression whose spatial variables are read as the unit direction `w`.
//! From it we build the ambient level set `F = |x| - R(x/|x|, t)`, whose
//! normalized gradient is the normal extension used by every tangential
//! operator.

use std::f64::consts::PI;

use thiserror::Error;

use crate::calculus;
use crate::expr::{parse, EvalError, Expr, ParseError, Point, Tape, TensorField, Var, VectorField};
use crate::numeric::{self, cross, dot, gauss_legendre_on, norm, par_map, scale, Mat3, Vec3};

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("chart tangents are rank-deficient at (u={u}, v={v}, t={t})")]
    Degenerate { u: f64, v: f64, t: f64 },
    #[error("non-positive radius {radius} at (u={u}, v={v}, t={t})")]
    NonPositiveRadius { radius: f64, u: f64, v: f64, t: f64 },
    #[error("surface reaches |x|={reach} but outer radius is {outer} (t={t})")]
    NotContained { reach: f64, outer: f64, t: f64 },
    #[error("non-finite integrand {value} at x=({}, {}, {}), t={t}", .x[0], .x[1], .x[2])]
    NonFinite { value: f64, x: Vec3, t: f64 },
    #[error("slip flag must be 0 or 1, got {0}")]
    BadSlip(i64),
    #[error("invalid quadrature: {0}")]
    BadRule(String),
}

/// Unit direction on the sphere for chart coordinates.
pub fn direction(u: f64, v: f64) -> Vec3 {
    [u.sin() * v.cos(), u.sin() * v.sin(), u.cos()]
}

fn ellipsoid_point(axes: &[f64; 3], u: f64, v: f64) -> Vec3 {
    [axes[0] * u.sin() * v.cos(), axes[1] * u.sin() * v.sin(), axes[2] * u.cos()]
}

fn direction_du(u: f64, v: f64) -> Vec3 {
    [u.cos() * v.cos(), u.cos() * v.sin(), -u.sin()]
}

fn direction_dv(u: f64, v: f64) -> Vec3 {
    [-u.sin() * v.sin(), u.sin() * v.cos(), 0.0]
}

/// Named surface families.
#[derive(Clone, Debug)]
pub enum SurfaceKind {
    /// Sphere with radius `R(t)`.
    Sphere { radius: Expr },
    /// Axis-aligned ellipsoid with semi-axes `scale(t) * axes`.
    Ellipsoid { axes: [f64; 3], scale: Expr },
    /// `R0(t) (1 + eps Y(w))`; `Y` is an expression in the direction.
    PerturbedSphere { base: Expr, eps: f64, mode: Expr },
    /// Arbitrary positive profile `R(w, t)`.
    Profile(Expr),
}

impl SurfaceKind {
    pub fn unit_sphere() -> Self {
        SurfaceKind::Sphere {
            radius: Expr::one(),
        }
    }

    pub fn sphere(radius: f64) -> Self {
        SurfaceKind::Sphere {
            radius: Expr::constant(radius),
        }
    }

    /// Default zonal mode `P2(cos u) = (3 w3^2 - 1) / 2`.
    pub fn p2_mode() -> Expr {
        parse("(3*x3^2 - 1)/2").expect("static expression")
    }

    fn profile(&self) -> Expr {
        match self {
            SurfaceKind::Sphere { radius } => radius.clone(),
            SurfaceKind::Ellipsoid { axes, scale } => {
                let q = crate::expr::sum(
                    Var::SPACE
                        .iter()
                        .zip(axes)
                        .map(|(&v, a)| Expr::var(v).square() / (a * a)),
                );
                scale / q.sqrt()
            }
            SurfaceKind::PerturbedSphere { base, eps, mode } => base * (1.0 + *eps * mode),
            SurfaceKind::Profile(p) => p.clone(),
        }
    }
}

/// A closed star-shaped surface moving in time.
#[derive(Clone)]
pub struct SurfaceChart {
    kind: SurfaceKind,
    profile: Expr,
    level_set: Expr,
    normal: VectorField,
    projection: TensorField,
    profile_tape: Tape,
    level_tape: Tape,
    /// Semi-axes when chart points follow the ellipsoidal parametrization.
    axes: Option<[f64; 3]>,
}

impl std::fmt::Debug for SurfaceChart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SurfaceChart").field("kind", &self.kind).finish()
    }
}

impl SurfaceChart {
    pub fn new(kind: SurfaceKind) -> Self {
        let profile = kind.profile();
        let r = VectorField::position().norm_sq().sqrt();
        let unit = VectorField::position().scale(&r.recip());
        let extended = profile.substitute(&[
            Some(unit.c[0].clone()),
            Some(unit.c[1].clone()),
            Some(unit.c[2].clone()),
            None,
        ]);
        let level_set = &r - &extended;
        let grad = calculus::grad(&level_set);
        let inv = grad.norm_sq().sqrt().recip();
        let normal = grad.scale(&inv);
        let projection = TensorField::identity().sub(&normal.outer(&normal));

        let mut profile_outputs = vec![profile.clone()];
        profile_outputs.extend(Var::SPACE.iter().map(|&v| extended.derivative(v)));
        let profile_tape = Tape::compile(&profile_outputs);

        let mut level_outputs = normal.to_vec();
        level_outputs.push(level_set.derivative(Var::T));
        level_outputs.push(grad.norm_sq().sqrt());
        let level_tape = Tape::compile(&level_outputs);

        let axes = match &kind {
            SurfaceKind::Ellipsoid { axes, .. } => Some(*axes),
            _ => None,
        };
        SurfaceChart {
            axes,
            kind,
            profile,
            level_set,
            normal,
            projection,
            profile_tape,
            level_tape,
        }
    }

    pub fn sphere(radius: f64) -> Self {
        SurfaceChart::new(SurfaceKind::sphere(radius))
    }

    pub fn kind(&self) -> &SurfaceKind {
        &self.kind
    }

    /// Radial profile with spatial variables read as the unit direction.
    pub fn profile(&self) -> &Expr {
        &self.profile
    }

    /// Signed level set, positive outside.
    pub fn level_set(&self) -> &Expr {
        &self.level_set
    }

    /// Outward unit normal extended off the surface.
    pub fn normal_field(&self) -> &VectorField {
        &self.normal
    }

    /// `I - n (x) n` built from the normal extension.
    pub fn projection_field(&self) -> &TensorField {
        &self.projection
    }

    /// `H = -div_Gamma n` as an ambient expression (valid on the surface).
    pub fn mean_curvature_field(&self) -> Expr {
        -calculus::surface_divergence(&self.normal, self)
    }

    /// Unit direction of chart point `(u, v)`. Star-shaped charts use the
    /// sphere direction; the ellipsoid uses `p / |p|` with
    /// `p = (a sin u cos v, b sin u sin v, c cos u)`, which keeps the area
    /// element analytic well beyond the poles in `cos u`.
    pub fn direction(&self, u: f64, v: f64) -> Vec3 {
        match self.axes {
            None => direction(u, v),
            Some(a) => {
                let p = ellipsoid_point(&a, u, v);
                scale(&p, 1.0 / norm(&p))
            }
        }
    }

    fn direction_derivs(&self, u: f64, v: f64) -> (Vec3, Vec3) {
        match self.axes {
            None => (direction_du(u, v), direction_dv(u, v)),
            Some(a) => {
                let p = ellipsoid_point(&a, u, v);
                let pu = [a[0] * u.cos() * v.cos(), a[1] * u.cos() * v.sin(), -a[2] * u.sin()];
                let pv = [-a[0] * u.sin() * v.sin(), a[1] * u.sin() * v.cos(), 0.0];
                let len = norm(&p);
                let unit_rate = |q: &Vec3| numeric::sub(&scale(q, 1.0 / len), &scale(&p, dot(&p, q) / len.powi(3)));
                (unit_rate(&pu), unit_rate(&pv))
            }
        }
    }

    /// Solid-angle density of the direction map relative to `sin u du dv`.
    pub fn solid_angle_factor(&self, u: f64, v: f64) -> f64 {
        match self.axes {
            None => 1.0,
            Some(a) => a[0] * a[1] * a[2] / norm(&ellipsoid_point(&a, u, v)).powi(3),
        }
    }

    pub fn radius_at(&self, u: f64, v: f64, t: f64) -> Result<f64, GeometryError> {
        let w = self.direction(u, v);
        let r = self.profile_tape.eval(&Point::at(w, t))?[0];
        if r <= 0.0 || !r.is_finite() {
            return Err(GeometryError::NonPositiveRadius { radius: r, u, v, t });
        }
        Ok(r)
    }

    pub fn position(&self, u: f64, v: f64, t: f64) -> Result<Vec3, GeometryError> {
        Ok(scale(&self.direction(u, v), self.radius_at(u, v, t)?))
    }

    /// Chart tangents `(x_u, x_v)`.
    pub fn tangents(&self, u: f64, v: f64, t: f64) -> Result<(Vec3, Vec3), GeometryError> {
        let w = self.direction(u, v);
        let vals = self.profile_tape.eval(&Point::at(w, t))?;
        let r = vals[0];
        if r <= 0.0 || !r.is_finite() {
            return Err(GeometryError::NonPositiveRadius { radius: r, u, v, t });
        }
        let g = [vals[1], vals[2], vals[3]];
        let (wu, wv) = self.direction_derivs(u, v);
        let ru = dot(&g, &wu);
        let rv = dot(&g, &wv);
        let xu = numeric::add(&scale(&w, ru), &scale(&wu, r));
        let xv = numeric::add(&scale(&w, rv), &scale(&wv, r));
        Ok((xu, xv))
    }

    /// Area element `|x_u x x_v|`; errors if tangents are rank-deficient.
    pub fn area_element(&self, u: f64, v: f64, t: f64) -> Result<f64, GeometryError> {
        let (xu, xv) = self.tangents(u, v, t)?;
        let a = norm(&cross(&xu, &xv));
        let r = self.radius_at(u, v, t)?;
        if !(a > 1e-14 * r * r) {
            return Err(GeometryError::Degenerate { u, v, t });
        }
        Ok(a)
    }

    /// Normal from the chart tangents (independent of the level-set route).
    pub fn chart_normal(&self, u: f64, v: f64, t: f64) -> Result<Vec3, GeometryError> {
        let (xu, xv) = self.tangents(u, v, t)?;
        let c = cross(&xu, &xv);
        let a = norm(&c);
        let r = self.radius_at(u, v, t)?;
        if !(a > 1e-14 * r * r) {
            return Err(GeometryError::Degenerate { u, v, t });
        }
        Ok(scale(&c, 1.0 / a))
    }

    /// Outward unit normal at chart coordinates. Well defined at the poles
    /// since it comes from the level set rather than the tangents.
    pub fn normal(&self, u: f64, v: f64, t: f64) -> Result<Vec3, GeometryError> {
        let x = self.position(u, v, t)?;
        self.normal_at(x, t)
    }

    pub fn normal_at(&self, x: Vec3, t: f64) -> Result<Vec3, GeometryError> {
        let vals = self.level_tape.eval(&Point::at(x, t))?;
        Ok([vals[0], vals[1], vals[2]])
    }

    /// Normal speed of the surface, `-dF/dt / |grad F|`.
    pub fn normal_speed_at(&self, x: Vec3, t: f64) -> Result<f64, GeometryError> {
        let vals = self.level_tape.eval(&Point::at(x, t))?;
        Ok(-vals[3] / vals[4])
    }

    pub fn projection(&self, u: f64, v: f64, t: f64) -> Result<Mat3, GeometryError> {
        Ok(projection_from_normal(&self.normal(u, v, t)?))
    }

    pub fn mean_curvature(&self, u: f64, v: f64, t: f64) -> Result<f64, GeometryError> {
        let x = self.position(u, v, t)?;
        Ok(self.mean_curvature_field().eval(&Point::at(x, t))?)
    }
}

pub fn projection_from_normal(n: &Vec3) -> Mat3 {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| if i == j { 1.0 } else { 0.0 } - n[i] * n[j])
    })
}

/// Slip flag `r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slip {
    NoSlip,
    Slip,
}

impl Slip {
    pub fn from_int(r: i64) -> Result<Slip, GeometryError> {
        match r {
            0 => Ok(Slip::NoSlip),
            1 => Ok(Slip::Slip),
            other => Err(GeometryError::BadSlip(other)),
        }
    }

    pub fn r(self) -> f64 {
        match self {
            Slip::NoSlip => 0.0,
            Slip::Slip => 1.0,
        }
    }
}

/// The ball `|x| < outer_radius` containing the moving surface.
#[derive(Clone, Debug)]
pub struct DomainConfig {
    pub outer_radius: f64,
    pub surface: SurfaceChart,
    pub slip: Slip,
}

impl DomainConfig {
    pub fn new(outer_radius: f64, surface: SurfaceChart, slip: Slip) -> Self {
        DomainConfig {
            outer_radius,
            surface,
            slip,
        }
    }

    /// Checks that the surface stays strictly inside the outer ball at each
    /// listed time, using the rule's surface nodes.
    pub fn check_contained(&self, rule: &QuadratureRule, times: &[f64]) -> Result<(), GeometryError> {
        for &t in times {
            let reach = rule
                .surface_nodes(&self.surface, t)?
                .iter()
                .map(|n| norm(&n.x))
                .fold(0.0, f64::max);
            if reach >= self.outer_radius {
                return Err(GeometryError::NotContained {
                    reach,
                    outer: self.outer_radius,
                    t,
                });
            }
        }
        Ok(())
    }

    /// Outward normal of the outer boundary.
    pub fn outer_normal(&self, x: &Vec3) -> Vec3 {
        scale(x, 1.0 / norm(x))
    }
}

/// Quadrature node on a surface (the moving surface or the outer sphere).
#[derive(Clone, Copy, Debug)]
pub struct SurfaceNode {
    pub u: f64,
    pub v: f64,
    pub x: Vec3,
    pub n: Vec3,
    pub w: f64,
}

/// Quadrature node in a volume region.
#[derive(Clone, Copy, Debug)]
pub struct VolumeNode {
    pub u: f64,
    pub v: f64,
    pub x: Vec3,
    pub w: f64,
}

/// Anything with a location and a weight.
pub trait WeightedPoint: Sync {
    fn pos(&self) -> Vec3;
    fn weight(&self) -> f64;
}

impl WeightedPoint for SurfaceNode {
    fn pos(&self) -> Vec3 {
        self.x
    }
    fn weight(&self) -> f64 {
        self.w
    }
}

impl WeightedPoint for VolumeNode {
    fn pos(&self) -> Vec3 {
        self.x
    }
    fn weight(&self) -> f64 {
        self.w
    }
}

/// Bulk regions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    /// `Omega_A(t)`, inside the surface.
    Inner,
    /// `Omega_B(t)`, between the surface and the outer sphere.
    Shell,
}

/// Tensor-product rule: `n` Gauss-Legendre nodes in the cosine of the polar
/// angle and in the radial variable, `2n` equispaced nodes in the azimuth.
///
/// `cap` restricts the polar angle to `(0, cap)`, giving the cone subset
/// `{angle(x, e3) < cap}` used for localized integral identities. On the
/// ellipsoid the cap applies to the chart parameter `u`, which is still a
/// cone about `e3` for the surface and the inner region.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureRule {
    pub n: usize,
    pub cap: Option<f64>,
}

impl QuadratureRule {
    pub fn new(n: usize) -> Self {
        QuadratureRule { n, cap: None }
    }

    pub fn with_cap(n: usize, cap: f64) -> Self {
        QuadratureRule { n, cap: Some(cap) }
    }

    fn polar_max(&self) -> f64 {
        self.cap.unwrap_or(PI).min(PI)
    }

    fn angular(&self) -> Result<Vec<(f64, f64, f64)>, GeometryError> {
        if self.n == 0 {
            return Err(GeometryError::BadRule("node count must be positive".into()));
        }
        let umax = self.polar_max();
        if !(umax > 0.0) {
            return Err(GeometryError::BadRule(format!("cap angle {umax} must be positive")));
        }
        let (zs, wzs) = gauss_legendre_on(self.n, umax.cos(), 1.0);
        let nv = 2 * self.n;
        let dv = 2.0 * PI / nv as f64;
        let mut out = Vec::with_capacity(self.n * nv);
        for (z, wz) in zs.iter().zip(&wzs).rev() {
            let u = z.clamp(-1.0, 1.0).acos();
            for k in 0..nv {
                out.push((u, k as f64 * dv, wz * dv));
            }
        }
        Ok(out)
    }

    pub fn surface_nodes(&self, chart: &SurfaceChart, t: f64) -> Result<Vec<SurfaceNode>, GeometryError> {
        let ang = self.angular()?;
        let nodes: Vec<Result<SurfaceNode, GeometryError>> = par_map(&ang, |&(u, v, w)| {
            let x = chart.position(u, v, t)?;
            let n = chart.normal_at(x, t)?;
            let a = chart.area_element(u, v, t)?;
            Ok(SurfaceNode { u, v, x, n, w: w * a / u.sin() })
        });
        nodes.into_iter().collect()
    }

    /// Nodes on the outer sphere `|x| = radius` (cap applies as well).
    pub fn boundary_nodes(&self, radius: f64) -> Result<Vec<SurfaceNode>, GeometryError> {
        let ang = self.angular()?;
        Ok(ang
            .iter()
            .map(|&(u, v, w)| {
                let d = direction(u, v);
                SurfaceNode {
                    u,
                    v,
                    x: scale(&d, radius),
                    n: d,
                    w: w * radius * radius,
                }
            })
            .collect())
    }

    pub fn volume_nodes(
        &self,
        domain: &DomainConfig,
        region: Region,
        t: f64,
    ) -> Result<Vec<VolumeNode>, GeometryError> {
        let ang = self.angular()?;
        let n = self.n;
        let (s, ws) = gauss_legendre_on(n, 0.0, 1.0);
        let chart = &domain.surface;
        let outer = domain.outer_radius;
        let per_dir: Vec<Result<Vec<VolumeNode>, GeometryError>> = par_map(&ang, |&(u, v, w)| {
            let d = chart.direction(u, v);
            let w_dir = w * chart.solid_angle_factor(u, v);
            let r_surf = chart.radius_at(u, v, t)?;
            let (r0, r1) = match region {
                Region::Inner => (0.0, r_surf),
                Region::Shell => {
                    if r_surf >= outer {
                        return Err(GeometryError::NotContained {
                            reach: r_surf,
                            outer,
                            t,
                        });
                    }
                    (r_surf, outer)
                }
            };
            if let (Region::Shell, Some(axes)) = (region, chart.axes) {
                return ellipsoid_shell(&axes, r_surf / norm(&ellipsoid_point(&axes, u, v)), outer, t, (u, v, w), (&s, &ws));
            }
            let len = r1 - r0;
            Ok(s.iter()
                .zip(&ws)
                .map(|(si, wi)| {
                    let r = r0 + len * si;
                    VolumeNode {
                        u,
                        v,
                        x: scale(&d, r),
                        w: w_dir * r * r * len * wi,
                    }
                })
                .collect())
        });
        let mut out = Vec::with_capacity(ang.len() * n);
        for chunk in per_dir {
            out.extend(chunk?);
        }
        Ok(out)
    }
}

/// Shell nodes between an ellipsoid with semi-axes `scale * axes` and the
/// outer sphere, on the blended ellipsoids
/// `x = (A(s) sin u cos v, B(s) sin u sin v, C(s) cos u)`, linear in `s`
/// from the surface to the sphere. The Jacobian is a trigonometric
/// polynomial, unlike that of radial rays from the origin.
fn ellipsoid_shell(
    axes: &[f64; 3],
    scale_now: f64,
    outer: f64,
    t: f64,
    (u, v, w): (f64, f64, f64),
    (s, ws): (&[f64], &[f64]),
) -> Result<Vec<VolumeNode>, GeometryError> {
    let inner = axes.map(|a| a * scale_now);
    let reach = inner.iter().cloned().fold(0.0, f64::max);
    if reach > outer {
        return Err(GeometryError::NotContained { reach, outer, t });
    }
    let rate = inner.map(|a| outer - a);
    let (su, cu, sv, cv) = (u.sin(), u.cos(), v.sin(), v.cos());
    Ok(s.iter()
        .zip(ws)
        .map(|(&si, &wi)| {
            let [a, b, c] = [0, 1, 2].map(|i| inner[i] + rate[i] * si);
            let jac = su * su * (rate[0] * b * c * cv * cv + a * rate[1] * c * sv * sv) + a * b * rate[2] * cu * cu;
            VolumeNode {
                u,
                v,
                x: [a * su * cv, b * su * sv, c * cu],
                w: w * wi * jac,
            }
        })
        .collect())
}

/// Compensated quadrature sum of `f` over weighted nodes. The map runs on
/// the global executor; the reduction is sequential in node order.
pub fn integrate<N, F>(nodes: &[N], t: f64, f: F) -> Result<f64, GeometryError>
where
    N: WeightedPoint,
    F: Fn(&N) -> Result<f64, GeometryError> + Sync + Send,
{
    let vals = par_map(nodes, |node| {
        let v = f(node)?;
        if !v.is_finite() {
            return Err(GeometryError::NonFinite {
                value: v,
                x: node.pos(),
                t,
            });
        }
        Ok(v * node.weight())
    });
    let mut acc = numeric::CompensatedSum::default();
    for v in vals {
        acc.add(v?);
    }
    Ok(acc.value())
}

/// Integrates several expressions at once over weighted nodes.
pub fn integrate_exprs<N: WeightedPoint>(
    nodes: &[N],
    exprs: &[Expr],
    t: f64,
) -> Result<Vec<f64>, GeometryError> {
    integrate_tape(nodes, &Tape::compile(exprs), t)
}

/// Integrates every output of a compiled tape over weighted nodes.
pub fn integrate_tape<N: WeightedPoint>(nodes: &[N], tape: &Tape, t: f64) -> Result<Vec<f64>, GeometryError> {
    let k = tape.n_outputs();
    let vals: Vec<Result<Vec<f64>, GeometryError>> = par_map(nodes, |node| {
        let v = tape.eval(&Point::at(node.pos(), t))?;
        for &x in &v {
            if !x.is_finite() {
                return Err(GeometryError::NonFinite {
                    value: x,
                    x: node.pos(),
                    t,
                });
            }
        }
        Ok(v)
    });
    let mut acc = vec![numeric::CompensatedSum::default(); k];
    for (node, v) in nodes.iter().zip(vals) {
        let v = v?;
        for i in 0..k {
            acc[i].add(v[i] * node.weight());
        }
    }
    Ok(acc.iter().map(|a| a.value()).collect())
}

pub fn integrate_surface(
    chart: &SurfaceChart,
    rule: &QuadratureRule,
    integrand: &Expr,
    t: f64,
) -> Result<f64, GeometryError> {
    let nodes = rule.surface_nodes(chart, t)?;
    Ok(integrate_exprs(&nodes, std::slice::from_ref(integrand), t)?[0])
}

pub fn integrate_volume(
    domain: &DomainConfig,
    region: Region,
    rule: &QuadratureRule,
    integrand: &Expr,
    t: f64,
) -> Result<f64, GeometryError> {
    let nodes = rule.volume_nodes(domain, region, t)?;
    Ok(integrate_exprs(&nodes, std::slice::from_ref(integrand), t)?[0])
}

pub fn integrate_outer_boundary(
    domain: &DomainConfig,
    rule: &QuadratureRule,
    integrand: &Expr,
    t: f64,
) -> Result<f64, GeometryError> {
    let nodes = rule.boundary_nodes(domain.outer_radius)?;
    Ok(integrate_exprs(&nodes, std::slice::from_ref(integrand), t)?[0])
}

/// Evaluates expressions at every node; rows follow node order.
pub fn eval_at_nodes<N: WeightedPoint>(
    nodes: &[N],
    exprs: &[Expr],
    t: f64,
) -> Result<Vec<Vec<f64>>, GeometryError> {
    let tape = Tape::compile(exprs);
    par_map(nodes, |node| Ok(tape.eval(&Point::at(node.pos(), t))?))
        .into_iter()
        .collect()
}

/// Pointwise projection identities and the closed-surface integral of
/// `H n`, over the nodes of a rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeometryIdentities {
    /// Max of `|P P - P|` (Frobenius).
    pub idempotence: f64,
    /// Max of `|P n|`.
    pub annihilates_normal: f64,
    /// Max of `||n| - 1|`.
    pub unit_normal: f64,
    /// `|int H n|`, zero on any closed surface.
    pub curvature_flux: f64,
    /// Mean curvature range over the nodes.
    pub curvature_min: f64,
    pub curvature_max: f64,
}

impl GeometryIdentities {
    pub fn pointwise_max(&self) -> f64 {
        self.idempotence.max(self.annihilates_normal).max(self.unit_normal)
    }
}

pub fn geometry_identities(chart: &SurfaceChart, rule: &QuadratureRule, t: f64) -> Result<GeometryIdentities, GeometryError> {
    let nodes = rule.surface_nodes(chart, t)?;
    let curv = eval_at_nodes(&nodes, &[chart.mean_curvature_field()], t)?;
    let mut out = GeometryIdentities {
        idempotence: 0.0,
        annihilates_normal: 0.0,
        unit_normal: 0.0,
        curvature_flux: 0.0,
        curvature_min: f64::INFINITY,
        curvature_max: f64::NEG_INFINITY,
    };
    let mut flux = [numeric::CompensatedSum::default(), numeric::CompensatedSum::default(), numeric::CompensatedSum::default()];
    for (node, h) in nodes.iter().zip(&curv) {
        let n = chart.normal(node.u, node.v, t)?;
        let p = projection_from_normal(&n);
        out.idempotence = out.idempotence.max(numeric::mat_dist(&numeric::mat_mul(&p, &p), &p));
        out.annihilates_normal = out.annihilates_normal.max(norm(&numeric::mat_vec(&p, &n)));
        out.unit_normal = out.unit_normal.max((norm(&n) - 1.0).abs());
        out.curvature_min = out.curvature_min.min(h[0]);
        out.curvature_max = out.curvature_max.max(h[0]);
        for i in 0..3 {
            flux[i].add(h[0] * n[i] * node.w);
        }
    }
    out.curvature_flux = norm(&[flux[0].value(), flux[1].value(), flux[2].value()]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{mat_dist, mat_mul, mat_vec};

    fn ellipsoid() -> SurfaceChart {
        SurfaceChart::new(SurfaceKind::Ellipsoid {
            axes: [1.0, 1.0, 2.0],
            scale: Expr::one(),
        })
    }

    fn perturbed() -> SurfaceChart {
        SurfaceChart::new(SurfaceKind::PerturbedSphere {
            base: parse("1 + 0.1*t").unwrap(),
            eps: 0.2,
            mode: SurfaceKind::p2_mode(),
        })
    }

    #[test]
    fn sphere_normal_is_radial() {
        let c = SurfaceChart::sphere(1.0);
        let n = c.normal(0.7, 1.3, 0.0).unwrap();
        let x = c.position(0.7, 1.3, 0.0).unwrap();
        for i in 0..3 {
            assert!((n[i] - x[i]).abs() < 1e-15);
        }
        let c2 = SurfaceChart::sphere(2.0);
        let n = c2.normal(0.3, 4.0, 0.0).unwrap();
        let x = c2.position(0.3, 4.0, 0.0).unwrap();
        for i in 0..3 {
            assert!((n[i] - x[i] / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn ellipsoid_pole_normal() {
        let c = ellipsoid();
        let n = c.normal(0.0, 0.0, 0.0).unwrap();
        assert!((n[0]).abs() < 1e-15 && (n[1]).abs() < 1e-15 && (n[2] - 1.0).abs() < 1e-15);
        let x = c.position(0.0, 0.0, 0.0).unwrap();
        assert!((x[2] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn projection_examples() {
        let p = projection_from_normal(&[0.0, 0.0, 1.0]);
        assert_eq!(p, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]]);
        let c = perturbed();
        for node in QuadratureRule::new(8).surface_nodes(&c, 0.3).unwrap() {
            let p = projection_from_normal(&node.n);
            assert!((p[0][0] + p[1][1] + p[2][2] - 2.0).abs() < 1e-12);
            assert!(norm(&mat_vec(&p, &node.n)) < 1e-12);
            assert!(mat_dist(&mat_mul(&p, &p), &p) < 1e-12);
        }
    }

    #[test]
    fn chart_normal_agrees_with_level_set_normal() {
        for c in [ellipsoid(), perturbed()] {
            for &(u, v) in &[(0.3, 0.1), (1.2, 2.5), (2.9, 5.0)] {
                let a = c.normal(u, v, 0.4).unwrap();
                let b = c.chart_normal(u, v, 0.4).unwrap();
                assert!(norm(&numeric::sub(&a, &b)) < 1e-12);
            }
        }
    }

    #[test]
    fn pole_tangents_are_degenerate() {
        let c = SurfaceChart::sphere(1.0);
        assert!(matches!(c.area_element(0.0, 0.0, 0.0), Err(GeometryError::Degenerate { .. })));
    }

    #[test]
    fn sphere_curvature() {
        let c = SurfaceChart::sphere(1.0);
        assert!((c.mean_curvature(0.4, 0.2, 0.0).unwrap() + 2.0).abs() < 1e-12);
        let c = SurfaceChart::sphere(2.0);
        assert!((c.mean_curvature(1.4, 3.2, 0.0).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn areas_and_volumes() {
        let rule = QuadratureRule::new(16);
        let c = SurfaceChart::sphere(1.0);
        let area = integrate_surface(&c, &rule, &Expr::one(), 0.0).unwrap();
        assert!((area - 4.0 * PI).abs() < 1e-10);
        let dom = DomainConfig::new(3.0, c, Slip::NoSlip);
        let vin = integrate_volume(&dom, Region::Inner, &rule, &Expr::one(), 0.0).unwrap();
        assert!((vin - 4.0 * PI / 3.0).abs() < 1e-10);
        let vout = integrate_volume(&dom, Region::Shell, &rule, &Expr::one(), 0.0).unwrap();
        assert!((vout - 4.0 * PI * 26.0 / 3.0).abs() < 1e-8);
        let b = integrate_outer_boundary(&dom, &rule, &Expr::one(), 0.0).unwrap();
        assert!((b - 36.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn ellipsoid_volume() {
        let dom = DomainConfig::new(3.0, ellipsoid(), Slip::NoSlip);
        let v = integrate_volume(&dom, Region::Inner, &QuadratureRule::new(24), &Expr::one(), 0.0)
            .unwrap();
        assert!((v - 4.0 * PI * 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn radial_polynomials_integrate_exactly() {
        // int_{|x|<1} |x|^k dx = 4 pi / (k + 3); degree k + 2 in r.
        let n = 12;
        let dom = DomainConfig::new(2.0, SurfaceChart::sphere(1.0), Slip::NoSlip);
        let rule = QuadratureRule::new(n);
        for k in 0..=(2 * n - 3) {
            let f = VectorField::position().norm_sq().powf(k as f64 / 2.0);
            let q = integrate_volume(&dom, Region::Inner, &rule, &f, 0.0).unwrap();
            let exact = 4.0 * PI / (k as f64 + 3.0);
            assert!((q - exact).abs() < 1e-13 * exact.max(1.0), "k={k}");
        }
    }

    #[test]
    fn cap_area() {
        // spherical cap of polar angle a on the unit sphere: 2 pi (1 - cos a)
        let a = 0.8;
        let c = SurfaceChart::sphere(1.0);
        let q = integrate_surface(&c, &QuadratureRule::with_cap(16, a), &Expr::one(), 0.0).unwrap();
        assert!((q - 2.0 * PI * (1.0 - a.cos())).abs() < 1e-12);
    }

    #[test]
    fn non_finite_integrand_reports_location() {
        let c = SurfaceChart::sphere(1.0);
        let nodes = QuadratureRule::new(4).surface_nodes(&c, 0.0).unwrap();
        let err = integrate(&nodes, 0.0, |_| Ok(f64::NAN)).unwrap_err();
        assert!(matches!(err, GeometryError::NonFinite { .. }));
    }

    #[test]
    fn containment_check() {
        let dom = DomainConfig::new(1.5, ellipsoid(), Slip::Slip);
        assert!(matches!(
            dom.check_contained(&QuadratureRule::new(8), &[0.0]),
            Err(GeometryError::NotContained { .. })
        ));
        let dom = DomainConfig::new(3.0, ellipsoid(), Slip::Slip);
        dom.check_contained(&QuadratureRule::new(8), &[0.0]).unwrap();
    }

    #[test]
    fn normal_speed_of_growing_sphere() {
        let c = SurfaceChart::new(SurfaceKind::Sphere {
            radius: parse("1+t").unwrap(),
        });
        let x = c.position(1.0, 1.0, 0.5).unwrap();
        assert!((c.normal_speed_at(x, 0.5).unwrap() - 1.0).abs() < 1e-14);
    }
}
