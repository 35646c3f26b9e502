//! Constitutive laws: heat fluxes, energy densities, stresses, jump
//! tractions, barotropic pressures and total energy.

use std::fmt;

use thiserror::Error;

use crate::calculus;
use crate::expr::{parse_with_vars, EvalError, Expr, ParseError, Point, TensorField, Var, VectorField};
use crate::geometry::{GeometryError, Slip, SurfaceChart};
use crate::numeric::Vec3;

#[derive(Debug, Error)]
pub enum ConstitutiveError {
    #[error("{phase}: {field} is required but not given and not derivable from the equation of state")]
    MissingField { phase: Phase, field: &'static str },
    #[error("{phase}: parameter {name} = {value} must be non-negative")]
    NegativeParameter { phase: Phase, name: &'static str, value: f64 },
    #[error("{phase}: parameter {name} = {value} must be positive")]
    NonPositiveParameter { phase: Phase, name: &'static str, value: f64 },
    #[error("density must be positive, got {0}")]
    NonPositiveDensity(f64),
    #[error("slip flag must be 0 or 1, got {0}")]
    InvalidSlip(i64),
    #[error("coupling conditions violated at x=({}, {}, {}): {what} = {value:e} > {tol:e}", .x[0], .x[1], .x[2])]
    Coupling { what: &'static str, value: f64, tol: f64, x: Vec3 },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    A,
    B,
    S,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::A, Phase::B, Phase::S];

    pub fn name(self) -> &'static str {
        match self {
            Phase::A => "A",
            Phase::B => "B",
            Phase::S => "S",
        }
    }

    pub fn is_surface(self) -> bool {
        self == Phase::S
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Equation of state.
#[derive(Clone, Debug)]
pub enum Eos {
    /// Density-only energy `p(rho)`, stored with the density in `x1`.
    Barotropic { law: Expr },
    /// `e = cv theta`, `pi = r_gas rho theta`, `entropy = cv ln theta - r_gas ln rho`.
    IdealGas { cv: f64, r_gas: f64 },
    /// Pressure, energy and entropy all come from the state.
    Explicit,
}

impl Eos {
    /// Parses a barotropic law written in `rho`.
    pub fn barotropic(src: &str) -> Result<Eos, ParseError> {
        Ok(Eos::Barotropic {
            law: parse_with_vars(src, &[("rho", Var::X1)])?,
        })
    }
}

#[derive(Clone, Debug)]
pub struct PhaseMaterial {
    pub phase: Phase,
    pub mu: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub eos: Eos,
}

impl PhaseMaterial {
    pub fn new(phase: Phase, mu: f64, lambda: f64, kappa: f64, eos: Eos) -> Result<Self, ConstitutiveError> {
        for (name, value) in [("mu", mu), ("lambda", lambda), ("kappa", kappa)] {
            if !(value >= 0.0) {
                return Err(ConstitutiveError::NegativeParameter { phase, name, value });
            }
        }
        if let Eos::IdealGas { cv, r_gas } = eos {
            for (name, value) in [("cv", cv), ("r_gas", r_gas)] {
                if !(value > 0.0) {
                    return Err(ConstitutiveError::NonPositiveParameter { phase, name, value });
                }
            }
        }
        Ok(PhaseMaterial {
            phase,
            mu,
            lambda,
            kappa,
            eos,
        })
    }

    pub fn inviscid(phase: Phase) -> Self {
        PhaseMaterial {
            phase,
            mu: 0.0,
            lambda: 0.0,
            kappa: 0.0,
            eos: Eos::Explicit,
        }
    }
}

/// Field values of one phase. Missing pressure, energy or entropy are
/// taken from the equation of state.
#[derive(Clone, Debug)]
pub struct PhaseState {
    pub rho: Expr,
    pub v: VectorField,
    pub theta: Expr,
    pub pi: Option<Expr>,
    pub e: Option<Expr>,
    pub entropy: Option<Expr>,
}

impl PhaseState {
    pub fn new(rho: Expr, v: VectorField, theta: Expr) -> Self {
        PhaseState {
            rho,
            v,
            theta,
            pi: None,
            e: None,
            entropy: None,
        }
    }

    pub fn at_rest(rho: f64, theta: f64) -> Self {
        PhaseState::new(Expr::constant(rho), VectorField::zero(), Expr::constant(theta))
    }

    pub fn with_pressure(mut self, pi: Expr) -> Self {
        self.pi = Some(pi);
        self
    }

    pub fn with_energy(mut self, e: Expr) -> Self {
        self.e = Some(e);
        self
    }

    pub fn with_entropy(mut self, s: Expr) -> Self {
        self.entropy = Some(s);
        self
    }
}

/// Where a phase lives: the bulk or the moving surface.
#[derive(Clone, Copy, Debug)]
pub enum Frame<'a> {
    Bulk,
    Surface(&'a SurfaceChart),
}

impl<'a> Frame<'a> {
    pub fn for_phase(phase: Phase, chart: &'a SurfaceChart) -> Frame<'a> {
        if phase.is_surface() {
            Frame::Surface(chart)
        } else {
            Frame::Bulk
        }
    }

    pub fn grad(&self, f: &Expr) -> VectorField {
        match self {
            Frame::Bulk => calculus::grad(f),
            Frame::Surface(c) => calculus::tangential_grad(f, c),
        }
    }

    pub fn div(&self, v: &VectorField) -> Expr {
        match self {
            Frame::Bulk => calculus::div(v),
            Frame::Surface(c) => calculus::surface_divergence(v, c),
        }
    }

    pub fn div_tensor(&self, t: &TensorField) -> VectorField {
        match self {
            Frame::Bulk => calculus::div_tensor(t),
            Frame::Surface(c) => calculus::surface_div_tensor(t, c),
        }
    }

    pub fn strain(&self, v: &VectorField) -> TensorField {
        match self {
            Frame::Bulk => calculus::strain_bulk(v),
            Frame::Surface(c) => calculus::strain_surface(v, c),
        }
    }

    /// `I` in the bulk, `P` on the surface.
    pub fn metric(&self) -> TensorField {
        match self {
            Frame::Bulk => TensorField::identity(),
            Frame::Surface(c) => c.projection_field().clone(),
        }
    }
}

/// `rho p'(rho) - p(rho)` as an expression in the density variable `x1`.
pub fn barotropic_law_pressure(law: &Expr) -> Expr {
    Expr::x1() * law.derivative(Var::X1) - law
}

/// Barotropic pressure at a density value.
pub fn barotropic_pressure(law: &Expr, rho: f64) -> Result<f64, ConstitutiveError> {
    if !(rho > 0.0) {
        return Err(ConstitutiveError::NonPositiveDensity(rho));
    }
    Ok(barotropic_law_pressure(law).eval(&Point::new(rho, 0.0, 0.0, 0.0))?)
}

/// Composes a law in `x1` with a density field.
pub fn compose_density(law: &Expr, rho: &Expr) -> Expr {
    law.substitute(&[Some(rho.clone()), Some(Expr::zero()), Some(Expr::zero()), None])
}

/// Pressure field: given, or from the equation of state.
pub fn pressure(mat: &PhaseMaterial, state: &PhaseState) -> Result<Expr, ConstitutiveError> {
    if let Some(pi) = &state.pi {
        return Ok(pi.clone());
    }
    match &mat.eos {
        Eos::IdealGas { r_gas, .. } => Ok(*r_gas * &state.rho * &state.theta),
        Eos::Barotropic { law } => Ok(compose_density(&barotropic_law_pressure(law), &state.rho)),
        Eos::Explicit => Err(ConstitutiveError::MissingField {
            phase: mat.phase,
            field: "pressure",
        }),
    }
}

pub fn internal_energy(mat: &PhaseMaterial, state: &PhaseState) -> Result<Expr, ConstitutiveError> {
    if let Some(e) = &state.e {
        return Ok(e.clone());
    }
    match &mat.eos {
        Eos::IdealGas { cv, .. } => Ok(*cv * &state.theta),
        _ => Err(ConstitutiveError::MissingField {
            phase: mat.phase,
            field: "internal energy",
        }),
    }
}

pub fn entropy(mat: &PhaseMaterial, state: &PhaseState) -> Result<Expr, ConstitutiveError> {
    if let Some(s) = &state.entropy {
        return Ok(s.clone());
    }
    match &mat.eos {
        Eos::IdealGas { cv, r_gas } => Ok(*cv * state.theta.ln() - *r_gas * state.rho.ln()),
        _ => Err(ConstitutiveError::MissingField {
            phase: mat.phase,
            field: "entropy",
        }),
    }
}

/// `kappa grad theta` (tangential on the surface).
pub fn heat_flux(mat: &PhaseMaterial, state: &PhaseState, frame: Frame) -> VectorField {
    frame.grad(&state.theta).scale(&Expr::constant(mat.kappa))
}

/// `mu |D(v)|^2 + lambda |div v|^2`.
pub fn dissipation_density(mat: &PhaseMaterial, state: &PhaseState, frame: Frame) -> Expr {
    let d = frame.strain(&state.v);
    let dv = frame.div(&state.v);
    mat.mu * d.frobenius(&d) + mat.lambda * dv.square()
}

pub fn kinetic_density(state: &PhaseState) -> Expr {
    0.5 * &state.rho * state.v.norm_sq()
}

/// `(div v) pi`.
pub fn work_density(mat: &PhaseMaterial, state: &PhaseState, frame: Frame) -> Result<Expr, ConstitutiveError> {
    Ok(frame.div(&state.v) * pressure(mat, state)?)
}

/// `kappa |grad theta|^2`.
pub fn thermal_density(mat: &PhaseMaterial, state: &PhaseState, frame: Frame) -> Expr {
    mat.kappa * frame.grad(&state.theta).norm_sq()
}

/// `mu D + lambda (div v) I - pi I`, with `P` replacing `I` on the surface.
pub fn stress(mat: &PhaseMaterial, state: &PhaseState, frame: Frame) -> Result<TensorField, ConstitutiveError> {
    stress_with_pressure(mat, &state.v, &pressure(mat, state)?, frame)
}

pub fn stress_with_pressure(mat: &PhaseMaterial, v: &VectorField, pi: &Expr, frame: Frame) -> Result<TensorField, ConstitutiveError> {
    let d = frame.strain(v);
    let iso = mat.lambda * frame.div(v) - pi;
    Ok(d.scale(&Expr::constant(mat.mu)).add(&frame.metric().scale(&iso)))
}

/// Bulk traction transmitted to the surface.
#[derive(Clone, Debug)]
pub enum JumpTraction {
    /// No-slip: scalar `mu n.(n.grad)v + lambda div v - pi`, acting along `n`.
    Normal(Expr),
    /// Slip: full bulk stress.
    Full(TensorField),
}

impl JumpTraction {
    /// The traction vector `T~ n`.
    pub fn on_normal(&self, n: &VectorField) -> VectorField {
        match self {
            JumpTraction::Normal(s) => n.scale(s),
            JumpTraction::Full(t) => t.apply(n),
        }
    }
}

pub fn jump_traction(
    mat: &PhaseMaterial,
    state: &PhaseState,
    chart: &SurfaceChart,
    slip: Slip,
) -> Result<JumpTraction, ConstitutiveError> {
    let pi = pressure(mat, state)?;
    Ok(match slip {
        Slip::NoSlip => {
            let n = chart.normal_field();
            let dn_v = state.v.map(|c| calculus::directional(n, c));
            JumpTraction::Normal(
                mat.mu * n.dot(&dn_v) + mat.lambda * calculus::div(&state.v) - pi,
            )
        }
        Slip::Slip => JumpTraction::Full(stress_with_pressure(mat, &state.v, &pi, Frame::Bulk)?),
    })
}

/// Slip flag from its integer form.
pub fn slip_from_int(r: i64) -> Result<Slip, ConstitutiveError> {
    Slip::from_int(r).map_err(|_| ConstitutiveError::InvalidSlip(r))
}

/// `E = rho |v|^2 / 2 + rho e`.
pub fn total_energy_density(mat: &PhaseMaterial, state: &PhaseState) -> Result<Expr, ConstitutiveError> {
    Ok(kinetic_density(state) + &state.rho * internal_energy(mat, state)?)
}

/// The three phases with materials, borrowed together.
#[derive(Clone, Copy)]
pub struct Phases<'a> {
    pub inner: (&'a PhaseMaterial, &'a PhaseState),
    pub outer: (&'a PhaseMaterial, &'a PhaseState),
    pub surface: (&'a PhaseMaterial, &'a PhaseState),
}

/// `E_S = T~_B n . v_S - T~_A n . v_S + q_B . n - q_A . n`.
pub fn energy_jump(phases: Phases, chart: &SurfaceChart, slip: Slip) -> Result<Expr, ConstitutiveError> {
    let n = chart.normal_field();
    let (ma, sa) = phases.inner;
    let (mb, sb) = phases.outer;
    let vs = &phases.surface.1.v;
    let ta = jump_traction(ma, sa, chart, slip)?.on_normal(n);
    let tb = jump_traction(mb, sb, chart, slip)?.on_normal(n);
    let qa = heat_flux(ma, sa, Frame::Bulk);
    let qb = heat_flux(mb, sb, Frame::Bulk);
    Ok(tb.sub(&ta).dot(vs) + qb.sub(&qa).dot(n))
}

/// Pointwise coupling residuals at a surface point, as `(name, value)`.
pub fn coupling_residuals(
    phases: Phases,
    chart: &SurfaceChart,
    slip: Slip,
    x: Vec3,
    t: f64,
) -> Result<Vec<(&'static str, f64)>, ConstitutiveError> {
    let p = Point::at(x, t);
    let n = chart.normal_at(x, t)?;
    let va = phases.inner.1.v.eval(&p)?;
    let vb = phases.outer.1.v.eval(&p)?;
    let vs = phases.surface.1.v.eval(&p)?;
    let r = slip.r();
    let proj = crate::geometry::projection_from_normal(&n);
    let tang = |a: &Vec3, b: &Vec3| {
        let d = [a[0] - r * b[0], a[1] - r * b[1], a[2] - r * b[2]];
        crate::numeric::norm(&crate::numeric::mat_vec(&proj, &d))
    };
    let normal = |a: &Vec3, b: &Vec3| crate::numeric::dot(&crate::numeric::sub(a, b), &n).abs();
    let ta = phases.inner.1.theta.eval(&p)?;
    let tb = phases.outer.1.theta.eval(&p)?;
    let ts = phases.surface.1.theta.eval(&p)?;
    Ok(vec![
        ("(v_A - v_S).n", normal(&va, &vs)),
        ("(v_B - v_S).n", normal(&vb, &vs)),
        ("P(v_A - r v_S)", tang(&va, &vs)),
        ("P(v_B - r v_S)", tang(&vb, &vs)),
        ("theta_A - theta_S", (ta - ts).abs()),
        ("theta_B - theta_S", (tb - ts).abs()),
    ])
}

/// Evaluates the energy jump at a surface point after checking the
/// coupling conditions there.
pub fn energy_jump_at(
    phases: Phases,
    chart: &SurfaceChart,
    slip: Slip,
    x: Vec3,
    t: f64,
    tol: f64,
) -> Result<f64, ConstitutiveError> {
    for (what, value) in coupling_residuals(phases, chart, slip, x, t)? {
        if value > tol {
            return Err(ConstitutiveError::Coupling { what, value, tol, x });
        }
    }
    Ok(energy_jump(phases, chart, slip)?.eval(&Point::at(x, t))?)
}
