//! Thermodynamic potentials, the equations they satisfy along solutions,
//! and entropy production.

use std::fmt;
use std::io::{self, Write};

use thiserror::Error;

use crate::calculus;
use crate::constitutive::{self, ConstitutiveError, Phase};
use crate::expr::{EvalError, Expr, Point, Tape, Var};
use crate::geometry::{eval_at_nodes, GeometryError, QuadratureRule, Region};
use crate::numeric::Vec3;
use crate::residuals::{self, ResidualError, SystemState};

#[derive(Debug, Error)]
pub enum ThermoError {
    #[error("{what} = {value} is not positive in phase {phase} at ({}, {}, {})", .x[0], .x[1], .x[2])]
    NonPositive { what: &'static str, value: f64, phase: Phase, x: Vec3 },
    #[error("preconditions violated: {}", format_violations(.0))]
    Precondition(Vec<(String, f64)>),
    #[error(transparent)]
    Residual(#[from] ResidualError),
    #[error(transparent)]
    Constitutive(#[from] ConstitutiveError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

fn format_violations(v: &[(String, f64)]) -> String {
    v.iter().map(|(w, x)| format!("{w} = {x:e}")).collect::<Vec<_>>().join("; ")
}

/// Specific potentials of one phase.
#[derive(Clone, Debug)]
pub struct Potentials {
    pub energy: Expr,
    pub enthalpy: Expr,
    pub entropy: Expr,
    pub helmholtz: Expr,
    pub gibbs: Expr,
    pub pressure: Expr,
}

/// `h = e + pi/rho`, `F^H = e - theta s`, `F^G = h - theta s`.
pub fn potentials(sys: &SystemState, phase: Phase) -> Result<Potentials, ThermoError> {
    let m = sys.material(phase);
    let s = sys.state(phase);
    let energy = constitutive::internal_energy(m, s)?;
    let pressure = constitutive::pressure(m, s)?;
    let entropy = constitutive::entropy(m, s)?;
    let enthalpy = &energy + &pressure / &s.rho;
    let helmholtz = &energy - &s.theta * &entropy;
    let gibbs = &enthalpy - &s.theta * &entropy;
    Ok(Potentials {
        energy,
        enthalpy,
        entropy,
        helmholtz,
        gibbs,
        pressure,
    })
}

fn dt(sys: &SystemState, phase: Phase, f: &Expr) -> Expr {
    calculus::material_derivative(f, &sys.state(phase).v)
}

/// Signed Gibbs gap `D_t e - theta D_t s + pi D_t(1/rho)`.
pub fn identity_field(sys: &SystemState, phase: Phase) -> Result<Expr, ThermoError> {
    let p = potentials(sys, phase)?;
    let s = sys.state(phase);
    Ok(dt(sys, phase, &p.energy) - &s.theta * dt(sys, phase, &p.entropy) + &p.pressure * dt(sys, phase, &s.rho.recip()))
}

/// The potential equations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PotentialEquation {
    Enthalpy,
    Entropy,
    Helmholtz,
    Gibbs,
}

impl PotentialEquation {
    pub const ALL: [PotentialEquation; 4] = [
        PotentialEquation::Enthalpy,
        PotentialEquation::Entropy,
        PotentialEquation::Helmholtz,
        PotentialEquation::Gibbs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PotentialEquation::Enthalpy => "enthalpy",
            PotentialEquation::Entropy => "entropy",
            PotentialEquation::Helmholtz => "helmholtz",
            PotentialEquation::Gibbs => "gibbs",
        }
    }
}

impl fmt::Display for PotentialEquation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn time_part(sys: &SystemState, phase: Phase, f: &Expr) -> Expr {
    if phase.is_surface() {
        calculus::normal_time_derivative(f, &sys.state(Phase::S).v, sys.chart())
    } else {
        f.derivative(Var::T)
    }
}

/// Residual of a potential equation (zero along solutions of the system
/// that satisfy the Gibbs relation).
pub fn potential_field(sys: &SystemState, which: PotentialEquation, phase: Phase) -> Result<Expr, ThermoError> {
    let m = sys.material(phase);
    let s = sys.state(phase);
    let frame = sys.frame(phase);
    let p = potentials(sys, phase)?;
    let q = constitutive::heat_flux(m, s, frame);
    let e_d = constitutive::dissipation_density(m, s, frame);
    let jump = if phase.is_surface() { sys.heat_jump() } else { Expr::zero() };
    Ok(match which {
        PotentialEquation::Enthalpy => {
            let rho_h = &s.rho * &p.enthalpy;
            time_part(sys, phase, &rho_h) + frame.div(&s.v.scale(&rho_h).sub(&q)) - e_d - dt(sys, phase, &p.pressure) - jump
        }
        PotentialEquation::Entropy => {
            let rho_s = &s.rho * &p.entropy;
            let inv = s.theta.recip();
            let flux = s.v.scale(&rho_s).sub(&q.scale(&inv));
            time_part(sys, phase, &rho_s) + frame.div(&flux)
                - e_d * &inv
                - q.dot(&frame.grad(&s.theta)) * inv.square()
                - jump * &inv
        }
        PotentialEquation::Helmholtz => {
            &s.rho * dt(sys, phase, &p.helmholtz)
                + &s.rho * &p.entropy * dt(sys, phase, &s.theta)
                + frame.div(&s.v) * &p.pressure
        }
        PotentialEquation::Gibbs => {
            &s.rho * dt(sys, phase, &p.gibbs) + &s.rho * &p.entropy * dt(sys, phase, &s.theta) - dt(sys, phase, &p.pressure)
        }
    })
}

/// What the residual of a potential equation equals for an arbitrary
/// state, written through the continuity residual `c`, the energy residual
/// `r_e` and the Gibbs gap `g`.
pub fn expected_field(sys: &SystemState, which: PotentialEquation, phase: Phase) -> Result<Expr, ThermoError> {
    let s = sys.state(phase);
    let p = potentials(sys, phase)?;
    let c = residuals::continuity_field(sys, phase);
    let r_e = residuals::energy_field(sys, phase)?;
    let g = identity_field(sys, phase)?;
    let pc = &p.pressure * &c / &s.rho;
    let rho_g = &s.rho * g;
    Ok(match which {
        PotentialEquation::Enthalpy => &p.energy * &c + r_e,
        PotentialEquation::Entropy => &p.entropy * &c + (r_e - pc - rho_g) / &s.theta,
        PotentialEquation::Helmholtz => pc + rho_g,
        PotentialEquation::Gibbs => rho_g,
    })
}

/// `e_D/theta + kappa |grad theta|^2 / theta^2` (tangential on the surface).
pub fn entropy_production_field(sys: &SystemState, phase: Phase) -> Expr {
    let m = sys.material(phase);
    let s = sys.state(phase);
    let frame = sys.frame(phase);
    let inv = s.theta.recip();
    constitutive::dissipation_density(m, s, frame) * &inv + constitutive::thermal_density(m, s, frame) * inv.square()
}

fn check_positive(sys: &SystemState, phase: Phase, x: Vec3, t: f64) -> Result<(), ThermoError> {
    let s = sys.state(phase);
    let p = Point::at(x, t);
    for (what, e) in [("density", &s.rho), ("temperature", &s.theta)] {
        let value = e.eval(&p)?;
        if !(value > 0.0) {
            return Err(ThermoError::NonPositive { what, value, phase, x });
        }
    }
    Ok(())
}

fn eval_at(sys: &SystemState, phase: Phase, e: &Expr, x: Vec3, t: f64) -> Result<f64, ThermoError> {
    sys.check_region(phase, x, t)?;
    check_positive(sys, phase, x, t)?;
    Ok(e.eval(&Point::at(x, t))?)
}

/// `|D_t e - theta D_t s + pi D_t(1/rho)|` at a point.
pub fn thermodynamic_identity_gap(sys: &SystemState, phase: Phase, x: Vec3, t: f64) -> Result<f64, ThermoError> {
    Ok(eval_at(sys, phase, &identity_field(sys, phase)?, x, t)?.abs())
}

/// Residual of a potential equation at a point, after checking that the
/// continuity and energy residuals and the Gibbs gap are within `tol`.
pub fn potential_equation_gap(
    sys: &SystemState,
    which: PotentialEquation,
    phase: Phase,
    x: Vec3,
    t: f64,
    tol: f64,
) -> Result<f64, ThermoError> {
    let checks = [
        ("continuity residual", residuals::continuity_field(sys, phase)),
        ("energy residual", residuals::energy_field(sys, phase)?),
        ("Gibbs gap", identity_field(sys, phase)?),
    ];
    let mut bad = Vec::new();
    for (what, e) in &checks {
        let v = eval_at(sys, phase, e, x, t)?.abs();
        if !(v <= tol) {
            bad.push((format!("{what} of phase {phase}"), v));
        }
    }
    if !bad.is_empty() {
        return Err(ThermoError::Precondition(bad));
    }
    Ok(eval_at(sys, phase, &potential_field(sys, which, phase)?, x, t)?.abs())
}

/// `|residual - expected|`: holds for every state, solution or not.
pub fn sourced_potential_gap(sys: &SystemState, which: PotentialEquation, phase: Phase, x: Vec3, t: f64) -> Result<f64, ThermoError> {
    let e = potential_field(sys, which, phase)? - expected_field(sys, which, phase)?;
    Ok(eval_at(sys, phase, &e, x, t)?.abs())
}

pub fn entropy_production(sys: &SystemState, phase: Phase, x: Vec3, t: f64) -> Result<f64, ThermoError> {
    eval_at(sys, phase, &entropy_production_field(sys, phase), x, t)
}

/// Gibbs-type relations for `e, h, F^H, F^G`, each with the weighted
/// material derivative `rho D_t` and with the gradient.
pub const MATERIAL_IDENTITIES: [&str; 8] = [
    "energy_material",
    "enthalpy_material",
    "helmholtz_material",
    "gibbs_material",
    "energy_gradient",
    "enthalpy_gradient",
    "helmholtz_gradient",
    "gibbs_gradient",
];

/// Signed residuals of the eight relations; the gradient ones are vectors
/// and are returned as three components each.
pub fn material_identity_fields(sys: &SystemState, phase: Phase) -> Result<Vec<Vec<Expr>>, ThermoError> {
    let s = sys.state(phase);
    let p = potentials(sys, phase)?;
    let vol = s.rho.recip();
    let weighted = |f: &Expr| &s.rho * dt(sys, phase, f);
    let relation = |d: &dyn Fn(&Expr) -> Expr| {
        [
            d(&p.energy) - &s.theta * d(&p.entropy) + &p.pressure * d(&vol),
            d(&p.enthalpy) - &s.theta * d(&p.entropy) - &vol * d(&p.pressure),
            d(&p.helmholtz) + &p.entropy * d(&s.theta) + &p.pressure * d(&vol),
            d(&p.gibbs) + &p.entropy * d(&s.theta) - &vol * d(&p.pressure),
        ]
    };
    let mut out: Vec<Vec<Expr>> = relation(&weighted).into_iter().map(|e| vec![e]).collect();
    let grads: Vec<[Expr; 4]> = Var::SPACE
        .iter()
        .map(|&v| relation(&|f: &Expr| f.derivative(v)))
        .collect();
    for k in 0..4 {
        out.push(grads.iter().map(|g| g[k].clone()).collect());
    }
    Ok(out)
}

/// Magnitudes of the eight relations at a point, in the order of
/// [`MATERIAL_IDENTITIES`].
pub fn material_potential_identities(sys: &SystemState, phase: Phase, x: Vec3, t: f64) -> Result<[f64; 8], ThermoError> {
    sys.check_region(phase, x, t)?;
    check_positive(sys, phase, x, t)?;
    let fields = material_identity_fields(sys, phase)?;
    let p = Point::at(x, t);
    let mut out = [0.0; 8];
    for (k, f) in fields.iter().enumerate() {
        let tape = Tape::compile(f);
        out[k] = tape.eval(&p)?.iter().map(|v| v * v).sum::<f64>().sqrt();
    }
    Ok(out)
}

/// Constructed-identity residuals `h - e - pi/rho`, `F^H - e + theta s`,
/// `F^G - h + theta s`, evaluated from independently built expressions.
pub fn constructed_identity_fields(sys: &SystemState, phase: Phase) -> Result<[Expr; 3], ThermoError> {
    let s = sys.state(phase);
    let p = potentials(sys, phase)?;
    Ok([
        &p.enthalpy - &p.energy - &p.pressure / &s.rho,
        &p.helmholtz - &p.energy + &s.theta * &p.entropy,
        &p.gibbs - &p.enthalpy + &s.theta * &p.entropy,
    ])
}

/// Worst value of one check over the nodes of a phase.
#[derive(Clone, Debug, PartialEq)]
pub struct ThermoRow {
    pub identity: String,
    pub phase: Phase,
    pub node_u: f64,
    pub node_v: f64,
    pub t: f64,
    pub gap: f64,
}

fn worst(identity: String, phase: Phase, uv: &[(f64, f64)], rows: &[Vec<f64>], col: std::ops::Range<usize>, t: f64) -> ThermoRow {
    let mut best = (0.0, f64::NAN, f64::NAN);
    for (i, row) in rows.iter().enumerate() {
        let mag = row[col.clone()].iter().map(|v| v * v).sum::<f64>().sqrt();
        if mag > best.0 || best.1.is_nan() {
            best = (mag, uv[i].0, uv[i].1);
        }
    }
    ThermoRow {
        identity,
        phase,
        node_u: best.1,
        node_v: best.2,
        t,
        gap: best.0,
    }
}

/// Node sweep of every thermodynamic check for one phase. Potential
/// equations are reported in their sourced form; entropy production is
/// reported as its negative part.
pub fn thermo_report(sys: &SystemState, phase: Phase, rule: &QuadratureRule, t: f64) -> Result<Vec<ThermoRow>, ThermoError> {
    let mut names: Vec<String> = Vec::new();
    let mut exprs: Vec<Expr> = Vec::new();
    let mut spans = Vec::new();
    let mut push = |name: &str, es: Vec<Expr>, names: &mut Vec<String>, exprs: &mut Vec<Expr>| {
        spans.push(exprs.len()..exprs.len() + es.len());
        names.push(name.to_string());
        exprs.extend(es);
    };
    push("gibbs_relation", vec![identity_field(sys, phase)?], &mut names, &mut exprs);
    for which in PotentialEquation::ALL {
        let e = potential_field(sys, which, phase)? - expected_field(sys, which, phase)?;
        push(which.name(), vec![e], &mut names, &mut exprs);
    }
    let [c1, c2, c3] = constructed_identity_fields(sys, phase)?;
    push("constructed_enthalpy", vec![c1], &mut names, &mut exprs);
    push("constructed_helmholtz", vec![c2], &mut names, &mut exprs);
    push("constructed_gibbs", vec![c3], &mut names, &mut exprs);
    for (name, f) in MATERIAL_IDENTITIES.iter().zip(material_identity_fields(sys, phase)?) {
        push(name, f, &mut names, &mut exprs);
    }
    let production = entropy_production_field(sys, phase);
    let s = sys.state(phase);
    exprs.push(production);
    exprs.push(s.rho.clone());
    exprs.push(s.theta.clone());
    let k = exprs.len();

    let (uv, xs, rows) = match phase {
        Phase::S => {
            let nodes = rule.surface_nodes(sys.chart(), t)?;
            let rows = eval_at_nodes(&nodes, &exprs, t)?;
            (nodes.iter().map(|n| (n.u, n.v)).collect::<Vec<_>>(), nodes.iter().map(|n| n.x).collect::<Vec<_>>(), rows)
        }
        Phase::A | Phase::B => {
            let region = if phase == Phase::A { Region::Inner } else { Region::Shell };
            let nodes = rule.volume_nodes(&sys.domain, region, t)?;
            let rows = eval_at_nodes(&nodes, &exprs, t)?;
            (nodes.iter().map(|n| (n.u, n.v)).collect(), nodes.iter().map(|n| n.x).collect(), rows)
        }
    };
    for (row, x) in rows.iter().zip(&xs) {
        for (what, value) in [("density", row[k - 2]), ("temperature", row[k - 1])] {
            if !(value > 0.0) {
                return Err(ThermoError::NonPositive { what, value, phase, x: *x });
            }
        }
    }
    let mut out: Vec<ThermoRow> = names
        .into_iter()
        .zip(spans)
        .map(|(name, span)| worst(name, phase, &uv, &rows, span, t))
        .collect();
    let negative: Vec<Vec<f64>> = rows.iter().map(|r| vec![(-r[k - 3]).max(0.0)]).collect();
    out.push(worst("entropy_production_negative_part".into(), phase, &uv, &negative, 0..1, t));
    Ok(out)
}

/// Writes `identity,phase,node_u,node_v,t,gap,pass`.
pub fn write_thermo_csv<W: Write>(w: &mut W, rows: &[ThermoRow], tol: impl Fn(&str) -> f64) -> io::Result<()> {
    writeln!(w, "identity,phase,node_u,node_v,t,gap,pass")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{:e},{}",
            r.identity,
            r.phase,
            r.node_u,
            r.node_v,
            r.t,
            r.gap,
            r.gap <= tol(&r.identity)
        )?;
    }
    Ok(())
}
