//! Pointwise residuals of the governing system and its conservative forms,
//! coupling/boundary residuals, and manufactured-solution sources.
//!
//! Every residual is built once as an ambient expression. Surface residuals
//! are only meaningful on the surface and are only evaluated there.

use std::fmt;
use std::io::{self, Write};

use thiserror::Error;

use crate::calculus;
use crate::constitutive::{
    self, ConstitutiveError, Frame, PhaseMaterial, PhaseState, Phase, Phases,
};
use crate::expr::{EvalError, Expr, Point, Tape, TensorField, VectorField};
use crate::geometry::{
    eval_at_nodes, DomainConfig, GeometryError, QuadratureRule, Region, Slip, SurfaceChart, WeightedPoint,
};
use crate::numeric::{self, Vec3};

#[derive(Debug, Error)]
pub enum ResidualError {
    #[error("point ({}, {}, {}) at t={t} is outside the region of phase {phase}", .x[0], .x[1], .x[2])]
    OutsideRegion { phase: Phase, x: Vec3, t: f64 },
    #[error(transparent)]
    Constitutive(#[from] ConstitutiveError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// The full three-phase configuration.
#[derive(Clone, Debug)]
pub struct SystemState {
    pub domain: DomainConfig,
    pub materials: [PhaseMaterial; 3],
    pub states: [PhaseState; 3],
}

fn index(phase: Phase) -> usize {
    match phase {
        Phase::A => 0,
        Phase::B => 1,
        Phase::S => 2,
    }
}

impl SystemState {
    pub fn new(domain: DomainConfig, materials: [PhaseMaterial; 3], states: [PhaseState; 3]) -> Self {
        SystemState {
            domain,
            materials,
            states,
        }
    }

    pub fn chart(&self) -> &SurfaceChart {
        &self.domain.surface
    }

    pub fn slip(&self) -> Slip {
        self.domain.slip
    }

    pub fn material(&self, phase: Phase) -> &PhaseMaterial {
        &self.materials[index(phase)]
    }

    pub fn state(&self, phase: Phase) -> &PhaseState {
        &self.states[index(phase)]
    }

    pub fn state_mut(&mut self, phase: Phase) -> &mut PhaseState {
        &mut self.states[index(phase)]
    }

    pub fn frame(&self, phase: Phase) -> Frame<'_> {
        Frame::for_phase(phase, self.chart())
    }

    pub fn phases(&self) -> Phases<'_> {
        Phases {
            inner: (&self.materials[0], &self.states[0]),
            outer: (&self.materials[1], &self.states[1]),
            surface: (&self.materials[2], &self.states[2]),
        }
    }

    fn parts(&self, phase: Phase) -> (&PhaseMaterial, &PhaseState, Frame<'_>) {
        (self.material(phase), self.state(phase), self.frame(phase))
    }

    /// Signed level set value, negative inside the surface.
    pub fn level(&self, x: Vec3, t: f64) -> Result<f64, ResidualError> {
        Ok(self.chart().level_set().eval(&Point::at(x, t))?)
    }

    /// Checks that `x` belongs to the closure of the phase's region.
    pub fn check_region(&self, phase: Phase, x: Vec3, t: f64) -> Result<(), ResidualError> {
        let f = self.level(x, t)?;
        let tol = 1e-9;
        let inside = match phase {
            Phase::A => f <= tol,
            Phase::B => f >= -tol && numeric::norm(&x) <= self.domain.outer_radius * (1.0 + 1e-12),
            Phase::S => f.abs() <= tol,
        };
        if inside {
            Ok(())
        } else {
            Err(ResidualError::OutsideRegion { phase, x, t })
        }
    }

    /// `q_B . n - q_A . n`.
    pub fn heat_jump(&self) -> Expr {
        let n = self.chart().normal_field();
        let qa = constitutive::heat_flux(self.material(Phase::A), self.state(Phase::A), Frame::Bulk);
        let qb = constitutive::heat_flux(self.material(Phase::B), self.state(Phase::B), Frame::Bulk);
        qb.sub(&qa).dot(n)
    }

    /// `T~_B n - T~_A n`.
    pub fn traction_jump(&self) -> Result<VectorField, ResidualError> {
        let n = self.chart().normal_field();
        let chart = self.chart();
        let ta = constitutive::jump_traction(self.material(Phase::A), self.state(Phase::A), chart, self.slip())?;
        let tb = constitutive::jump_traction(self.material(Phase::B), self.state(Phase::B), chart, self.slip())?;
        Ok(tb.on_normal(n).sub(&ta.on_normal(n)))
    }
}

/// Continuity: `D_t rho + (div v) rho`.
pub fn continuity_field(sys: &SystemState, phase: Phase) -> Expr {
    let (_, s, frame) = sys.parts(phase);
    calculus::material_derivative(&s.rho, &s.v) + frame.div(&s.v) * &s.rho
}

/// Internal energy: `rho D_t e + (div v) pi - div q - e_D`, with the heat
/// jump subtracted on the surface.
pub fn energy_field(sys: &SystemState, phase: Phase) -> Result<Expr, ResidualError> {
    let (m, s, frame) = sys.parts(phase);
    let e = constitutive::internal_energy(m, s)?;
    let pi = constitutive::pressure(m, s)?;
    let q = constitutive::heat_flux(m, s, frame);
    let mut res = &s.rho * calculus::material_derivative(&e, &s.v) + frame.div(&s.v) * pi
        - frame.div(&q)
        - constitutive::dissipation_density(m, s, frame);
    if phase.is_surface() {
        res = res - sys.heat_jump();
    }
    Ok(res)
}

/// Momentum: `rho D_t v - div T`, with the traction jump subtracted on the
/// surface.
pub fn momentum_field(sys: &SystemState, phase: Phase) -> Result<VectorField, ResidualError> {
    let (m, s, frame) = sys.parts(phase);
    let stress = constitutive::stress(m, s, frame)?;
    let accel = calculus::material_derivative_vector(&s.v, &s.v).scale(&s.rho);
    let mut res = accel.sub(&frame.div_tensor(&stress));
    if phase.is_surface() {
        res = res.sub(&sys.traction_jump()?);
    }
    Ok(res)
}

/// `d_t f` in the bulk, `D_t^N f` on the surface.
fn time_part(sys: &SystemState, phase: Phase, f: &Expr) -> Expr {
    if phase.is_surface() {
        calculus::normal_time_derivative(f, &sys.state(Phase::S).v, sys.chart())
    } else {
        f.derivative(crate::expr::Var::T)
    }
}

/// Conservative mass form.
pub fn conservative_mass_field(sys: &SystemState, phase: Phase) -> Expr {
    let (_, s, frame) = sys.parts(phase);
    time_part(sys, phase, &s.rho) + frame.div(&s.v.scale(&s.rho))
}

/// Conservative total-energy form, minus the energy jump on the surface.
pub fn conservative_energy_field(sys: &SystemState, phase: Phase) -> Result<Expr, ResidualError> {
    let (m, s, frame) = sys.parts(phase);
    let big_e = constitutive::total_energy_density(m, s)?;
    let q = constitutive::heat_flux(m, s, frame);
    let stress = constitutive::stress(m, s, frame)?;
    let flux = s.v.scale(&big_e).sub(&q).sub(&stress.apply(&s.v));
    let mut res = time_part(sys, phase, &big_e) + frame.div(&flux);
    if phase.is_surface() {
        res = res - constitutive::energy_jump(sys.phases(), sys.chart(), sys.slip())?;
    }
    Ok(res)
}

/// Conservative momentum form, minus the traction jump on the surface.
pub fn conservative_momentum_field(sys: &SystemState, phase: Phase) -> Result<VectorField, ResidualError> {
    let (m, s, frame) = sys.parts(phase);
    let stress = constitutive::stress(m, s, frame)?;
    let mv = s.v.scale(&s.rho);
    let flux = mv.outer(&s.v).sub(&stress);
    let mut res = mv.map(|c| time_part(sys, phase, c)).add(&frame.div_tensor(&flux));
    if phase.is_surface() {
        res = res.sub(&sys.traction_jump()?);
    }
    Ok(res)
}

/// Manufactured-solution sources: the residuals of the given fields. Adding
/// them to the right-hand sides makes the fields an exact solution.
#[derive(Clone, Debug)]
pub struct MmsSources {
    pub mass: [Expr; 3],
    pub energy: [Option<Expr>; 3],
    pub momentum: [VectorField; 3],
}

pub fn mms_sources(sys: &SystemState) -> Result<MmsSources, ResidualError> {
    let energy = Phase::ALL.map(|p| energy_field(sys, p).ok());
    let momentum = [
        momentum_field(sys, Phase::A)?,
        momentum_field(sys, Phase::B)?,
        momentum_field(sys, Phase::S)?,
    ];
    Ok(MmsSources {
        mass: Phase::ALL.map(|p| continuity_field(sys, p)),
        energy,
        momentum,
    })
}

fn eval_checked(sys: &SystemState, phase: Phase, exprs: &[Expr], x: Vec3, t: f64) -> Result<Vec<f64>, ResidualError> {
    sys.check_region(phase, x, t)?;
    Ok(Tape::compile(exprs).eval(&Point::at(x, t))?)
}

pub fn continuity_residual(sys: &SystemState, phase: Phase, x: Vec3, t: f64) -> Result<f64, ResidualError> {
    Ok(eval_checked(sys, phase, &[continuity_field(sys, phase)], x, t)?[0])
}

pub fn energy_residual(sys: &SystemState, phase: Phase, x: Vec3, t: f64) -> Result<f64, ResidualError> {
    Ok(eval_checked(sys, phase, &[energy_field(sys, phase)?], x, t)?[0])
}

pub fn momentum_residual(sys: &SystemState, phase: Phase, x: Vec3, t: f64) -> Result<Vec3, ResidualError> {
    let v = eval_checked(sys, phase, &momentum_field(sys, phase)?.c, x, t)?;
    Ok([v[0], v[1], v[2]])
}

/// Conservative-form residuals at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConservativeResidual {
    pub mass: f64,
    pub energy: Option<f64>,
    pub momentum: Option<Vec3>,
}

/// Maps a missing-field error to `None`.
fn optional<T>(r: Result<T, ResidualError>) -> Result<Option<T>, ResidualError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(ResidualError::Constitutive(ConstitutiveError::MissingField { .. })) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn conservative_residual(sys: &SystemState, phase: Phase, x: Vec3, t: f64) -> Result<ConservativeResidual, ResidualError> {
    sys.check_region(phase, x, t)?;
    let p = Point::at(x, t);
    let mass = conservative_mass_field(sys, phase).eval(&p)?;
    let energy = optional(conservative_energy_field(sys, phase))?.map(|e| e.eval(&p)).transpose()?;
    let momentum = optional(conservative_momentum_field(sys, phase))?.map(|m| m.eval(&p)).transpose()?;
    Ok(ConservativeResidual { mass, energy, momentum })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Equation {
    Continuity,
    Energy,
    Momentum,
    ConservativeMass,
    ConservativeEnergy,
    ConservativeMomentum,
}

impl Equation {
    pub const ALL: [Equation; 6] = [
        Equation::Continuity,
        Equation::Energy,
        Equation::Momentum,
        Equation::ConservativeMass,
        Equation::ConservativeEnergy,
        Equation::ConservativeMomentum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Equation::Continuity => "continuity",
            Equation::Energy => "energy",
            Equation::Momentum => "momentum",
            Equation::ConservativeMass => "conservative_mass",
            Equation::ConservativeEnergy => "conservative_energy",
            Equation::ConservativeMomentum => "conservative_momentum",
        }
    }

    /// Residual components; `None` when the state lacks what the equation
    /// needs (for example no internal energy).
    pub fn fields(self, sys: &SystemState, phase: Phase) -> Result<Option<Vec<Expr>>, ResidualError> {
        let wrap = optional::<Vec<Expr>>;
        match self {
            Equation::Continuity => Ok(Some(vec![continuity_field(sys, phase)])),
            Equation::Energy => wrap(energy_field(sys, phase).map(|e| vec![e])),
            Equation::Momentum => wrap(momentum_field(sys, phase).map(|v| v.to_vec())),
            Equation::ConservativeMass => Ok(Some(vec![conservative_mass_field(sys, phase)])),
            Equation::ConservativeEnergy => wrap(conservative_energy_field(sys, phase).map(|e| vec![e])),
            Equation::ConservativeMomentum => wrap(conservative_momentum_field(sys, phase).map(|v| v.to_vec())),
        }
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Norms of one residual over the quadrature nodes of its region.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualReport {
    pub equation: Equation,
    pub phase: Phase,
    pub norm_inf: f64,
    pub norm_l2: f64,
    pub node_u: f64,
    pub node_v: f64,
    pub t: f64,
}

fn norms<N: WeightedPoint>(nodes: &[N], uv: impl Fn(&N) -> (f64, f64), rows: &[Vec<f64>]) -> (f64, f64, f64, f64) {
    let mut inf = 0.0;
    let mut arg = (f64::NAN, f64::NAN);
    let mut l2 = numeric::CompensatedSum::default();
    for (node, row) in nodes.iter().zip(rows) {
        let mag = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if mag > inf || arg.0.is_nan() {
            inf = mag;
            arg = uv(node);
        }
        l2.add(mag * mag * node.weight());
    }
    (inf, l2.value().max(0.0).sqrt(), arg.0, arg.1)
}

/// Residual norms of one equation and phase.
pub fn residual_norms(
    sys: &SystemState,
    equation: Equation,
    phase: Phase,
    rule: &QuadratureRule,
    t: f64,
) -> Result<Option<ResidualReport>, ResidualError> {
    let Some(fields) = equation.fields(sys, phase)? else {
        return Ok(None);
    };
    let (inf, l2, u, v) = match phase {
        Phase::S => {
            let nodes = rule.surface_nodes(sys.chart(), t)?;
            let rows = eval_at_nodes(&nodes, &fields, t)?;
            norms(&nodes, |n| (n.u, n.v), &rows)
        }
        Phase::A | Phase::B => {
            let region = if phase == Phase::A { Region::Inner } else { Region::Shell };
            let nodes = rule.volume_nodes(&sys.domain, region, t)?;
            let rows = eval_at_nodes(&nodes, &fields, t)?;
            norms(&nodes, |n| (n.u, n.v), &rows)
        }
    };
    Ok(Some(ResidualReport {
        equation,
        phase,
        norm_inf: inf,
        norm_l2: l2,
        node_u: u,
        node_v: v,
        t,
    }))
}

/// Reports for every available equation and phase.
pub fn residual_report(sys: &SystemState, rule: &QuadratureRule, t: f64) -> Result<Vec<ResidualReport>, ResidualError> {
    let mut out = Vec::new();
    for eq in Equation::ALL {
        for phase in Phase::ALL {
            if let Some(r) = residual_norms(sys, eq, phase, rule, t)? {
                out.push(r);
            }
        }
    }
    Ok(out)
}

pub fn write_residual_csv<W: Write>(w: &mut W, reports: &[ResidualReport]) -> io::Result<()> {
    writeln!(w, "equation,phase,norm_inf,norm_l2,node_u,node_v,t")?;
    for r in reports {
        writeln!(
            w,
            "{},{},{:e},{:e},{},{},{}",
            r.equation, r.phase, r.norm_inf, r.norm_l2, r.node_u, r.node_v, r.t
        )?;
    }
    Ok(())
}

/// Differences between each conservative residual and the combination of
/// non-conservative residuals it should equal:
/// mass = continuity, momentum = momentum + v continuity,
/// energy = energy + v . momentum + (e + |v|^2/2) continuity.
pub fn form_equivalence_fields(sys: &SystemState, phase: Phase) -> Result<Vec<Expr>, ResidualError> {
    let s = sys.state(phase);
    let cont = continuity_field(sys, phase);
    let mom = momentum_field(sys, phase)?;
    let mut out = vec![conservative_mass_field(sys, phase) - &cont];
    let cons_mom = conservative_momentum_field(sys, phase)?;
    out.extend(cons_mom.sub(&mom.add(&s.v.scale(&cont))).to_vec());
    if let Some(energy) = optional(energy_field(sys, phase))? {
        let e = constitutive::internal_energy(sys.material(phase), s)?;
        let combined = energy + mom.dot(&s.v) + (e + 0.5 * s.v.norm_sq()) * &cont;
        out.push(conservative_energy_field(sys, phase)? - combined);
    }
    Ok(out)
}

/// Largest form-equivalence gap over the nodes of a phase.
pub fn form_equivalence_gap(sys: &SystemState, phase: Phase, rule: &QuadratureRule, t: f64) -> Result<f64, ResidualError> {
    let fields = form_equivalence_fields(sys, phase)?;
    let rows = match phase {
        Phase::S => eval_at_nodes(&rule.surface_nodes(sys.chart(), t)?, &fields, t)?,
        Phase::A => eval_at_nodes(&rule.volume_nodes(&sys.domain, Region::Inner, t)?, &fields, t)?,
        Phase::B => eval_at_nodes(&rule.volume_nodes(&sys.domain, Region::Shell, t)?, &fields, t)?,
    };
    Ok(rows.iter().flatten().fold(0.0, |m, v| m.max(v.abs())))
}

/// Names of the pointwise algebraic identities checked by
/// [`algebraic_identities`].
pub const ALGEBRAIC_IDENTITIES: [&str; 7] = [
    "pressure_divergence",
    "strain_ambient_form",
    "strain_component_form",
    "strain_trace",
    "stress_power_A",
    "stress_power_B",
    "stress_power_S",
];

fn stress_power_gap(sys: &SystemState, phase: Phase) -> Result<Expr, ResidualError> {
    let (m, st, frame) = (sys.material(phase), sys.state(phase), sys.frame(phase));
    let t = constitutive::stress(m, st, frame)?;
    let d = frame.strain(&st.v);
    Ok(t.frobenius(&d) - constitutive::dissipation_density(m, st, frame) + constitutive::work_density(m, st, frame)?)
}

/// Max node gaps of the surface pressure divergence, the three forms of the
/// surface strain and its trace, and the stress power split in each phase.
pub fn algebraic_identities(sys: &SystemState, rule: &QuadratureRule, t: f64) -> Result<Vec<(&'static str, f64)>, ResidualError> {
    let chart = sys.chart();
    let ss = sys.state(Phase::S);
    let pi_s = constitutive::pressure(sys.material(Phase::S), ss)?;
    let p = chart.projection_field();
    let n = chart.normal_field();
    let lhs = calculus::surface_div_tensor(&p.scale(&pi_s), chart);
    let rhs = calculus::tangential_grad(&pi_s, chart).add(&n.scale(&(&pi_s * chart.mean_curvature_field())));
    let d = calculus::strain_surface(&ss.v, chart);
    let da = calculus::strain_surface_ambient(&ss.v, chart);
    let dc = calculus::strain_surface_components(&ss.v, chart);
    let trace = p.frobenius(&d) - calculus::surface_divergence(&ss.v, chart);
    let mut surface = lhs.sub(&rhs).to_vec();
    surface.extend(d.sub(&da).to_vec());
    surface.extend(d.sub(&dc).to_vec());
    surface.push(trace);
    surface.push(stress_power_gap(sys, Phase::S)?);
    let rows = eval_at_nodes(&rule.surface_nodes(chart, t)?, &surface, t)?;
    let worst = |range: std::ops::Range<usize>, rows: &[Vec<f64>], frob: bool| {
        rows.iter().fold(0.0_f64, |m, r| {
            let v = if frob {
                r[range.clone()].iter().map(|x| x * x).sum::<f64>().sqrt()
            } else {
                r[range.clone()].iter().fold(0.0_f64, |a, x| a.max(x.abs()))
            };
            m.max(v)
        })
    };
    let mut out = vec![
        ("pressure_divergence", worst(0..3, &rows, true)),
        ("strain_ambient_form", worst(3..12, &rows, true)),
        ("strain_component_form", worst(12..21, &rows, true)),
        ("strain_trace", worst(21..22, &rows, false)),
    ];
    for (name, phase, region) in [("stress_power_A", Phase::A, Region::Inner), ("stress_power_B", Phase::B, Region::Shell)] {
        let rows = eval_at_nodes(&rule.volume_nodes(&sys.domain, region, t)?, &[stress_power_gap(sys, phase)?], t)?;
        out.push((name, worst(0..1, &rows, false)));
    }
    out.push(("stress_power_S", worst(22..23, &rows, false)));
    Ok(out)
}

/// Maximum violations of the boundary and coupling conditions.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryReport {
    pub conditions: Vec<(&'static str, f64)>,
}

impl BoundaryReport {
    pub fn max(&self) -> f64 {
        self.conditions.iter().map(|c| c.1).fold(0.0, f64::max)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.conditions.iter().find(|c| c.0 == name).map(|c| c.1)
    }
}

pub fn boundary_residual(sys: &SystemState, rule: &QuadratureRule, t: f64) -> Result<BoundaryReport, ResidualError> {
    let outer_nodes = rule.boundary_nodes(sys.domain.outer_radius)?;
    let sb = sys.state(Phase::B);
    let x = VectorField::position();
    let r_outer = x.norm_sq().sqrt();
    let n_outer = x.scale(&r_outer.recip());
    let dn_theta = calculus::directional(&n_outer, &sb.theta);
    let mut outer_exprs = sb.v.to_vec();
    outer_exprs.push(dn_theta);
    let outer_rows = eval_at_nodes(&outer_nodes, &outer_exprs, t)?;
    let mut v_wall: f64 = 0.0;
    let mut neumann: f64 = 0.0;
    for row in &outer_rows {
        v_wall = v_wall.max(numeric::norm(&[row[0], row[1], row[2]]));
        neumann = neumann.max(row[3].abs());
    }

    let n = sys.chart().normal_field();
    let p = sys.chart().projection_field();
    let r = Expr::constant(sys.slip().r());
    let va = &sys.state(Phase::A).v;
    let vb = &sb.v;
    let vs = &sys.state(Phase::S).v;
    let rvs = vs.scale(&r);
    let tang = |a: &VectorField| p.apply(a).to_vec();
    let mut exprs = vec![va.sub(vs).dot(n), vb.sub(vs).dot(n)];
    exprs.extend(tang(&va.sub(&rvs)));
    exprs.extend(tang(&vb.sub(&rvs)));
    exprs.extend(tang(&va.sub(vb)));
    exprs.push(&sys.state(Phase::A).theta - &sys.state(Phase::S).theta);
    exprs.push(&sb.theta - &sys.state(Phase::S).theta);
    let nodes = rule.surface_nodes(sys.chart(), t)?;
    let rows = eval_at_nodes(&nodes, &exprs, t)?;
    let mut m = [0.0f64; 7];
    for row in &rows {
        m[0] = m[0].max(row[0].abs());
        m[1] = m[1].max(row[1].abs());
        m[2] = m[2].max(numeric::norm(&[row[2], row[3], row[4]]));
        m[3] = m[3].max(numeric::norm(&[row[5], row[6], row[7]]));
        m[4] = m[4].max(numeric::norm(&[row[8], row[9], row[10]]));
        m[5] = m[5].max(row[11].abs());
        m[6] = m[6].max(row[12].abs());
    }
    Ok(BoundaryReport {
        conditions: vec![
            ("v_B on outer boundary", v_wall),
            ("(v_A - v_S).n", m[0]),
            ("(v_B - v_S).n", m[1]),
            ("P(v_A - r v_S)", m[2]),
            ("P(v_B - r v_S)", m[3]),
            ("P(v_A - v_B)", m[4]),
            ("(n.grad) theta_B on outer boundary", neumann),
            ("theta_A - theta_S", m[5]),
            ("theta_B - theta_S", m[6]),
        ],
    })
}

/// Outer-boundary traction `int (mu_B D(v_B) n + lambda_B (div v_B) n - pi_B n)`.
pub fn outer_traction(sys: &SystemState, rule: &QuadratureRule, t: f64) -> Result<Vec3, ResidualError> {
    let mb = sys.material(Phase::B);
    let sb = sys.state(Phase::B);
    let stress: TensorField = constitutive::stress(mb, sb, Frame::Bulk)?;
    let x = VectorField::position();
    let n = x.scale(&x.norm_sq().sqrt().recip());
    let traction = stress.apply(&n);
    let nodes = rule.boundary_nodes(sys.domain.outer_radius)?;
    let v = crate::geometry::integrate_exprs(&nodes, &traction.c, t)?;
    Ok([v[0], v[1], v[2]])
}
