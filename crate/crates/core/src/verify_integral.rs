//! Integral identities on moving regions: transport theorems, integration
//! by parts, the first law in both forms, and the global conservation audits.

use std::fmt;
use std::io::{self, Write};

use thiserror::Error;

use crate::calculus;
use crate::constitutive::{self, ConstitutiveError, Eos, Phase};
use crate::expr::{EvalError, Expr, Tape, Var, VectorField};
use crate::geometry::{
    integrate_tape, DomainConfig, GeometryError, QuadratureRule, Region, SurfaceChart, SurfaceNode, VolumeNode,
};
use crate::numeric::{self, gauss_legendre_on};
use crate::residuals::{self, ResidualError, SystemState};

#[derive(Debug, Error)]
pub enum IntegralError {
    #[error("surface motion disagrees with the velocity: max normal-speed mismatch {mismatch:e} exceeds {tol:e}")]
    InconsistentMotion { mismatch: f64, tol: f64 },
    #[error("preconditions violated: {}", format_violations(.0))]
    Precondition(Vec<Violation>),
    #[error("invalid setting: {0}")]
    Setting(String),
    #[error(transparent)]
    Residual(#[from] ResidualError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Constitutive(#[from] ConstitutiveError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// One failed precondition.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub what: String,
    pub value: f64,
    pub tol: f64,
    pub t: f64,
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|v| format!("{} = {:e} > {:e} at t={}", v.what, v.value, v.tol, v.t))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Where a moving integral lives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntegralRegion {
    Inner,
    Shell,
    Surface,
    OuterBoundary,
}

impl IntegralRegion {
    pub fn of_phase(phase: Phase) -> Self {
        match phase {
            Phase::A => IntegralRegion::Inner,
            Phase::B => IntegralRegion::Shell,
            Phase::S => IntegralRegion::Surface,
        }
    }
}

enum Nodes {
    Surface(Vec<SurfaceNode>),
    Volume(Vec<VolumeNode>),
}

fn nodes(domain: &DomainConfig, region: IntegralRegion, rule: &QuadratureRule, t: f64) -> Result<Nodes, GeometryError> {
    Ok(match region {
        IntegralRegion::Inner => Nodes::Volume(rule.volume_nodes(domain, Region::Inner, t)?),
        IntegralRegion::Shell => Nodes::Volume(rule.volume_nodes(domain, Region::Shell, t)?),
        IntegralRegion::Surface => Nodes::Surface(rule.surface_nodes(&domain.surface, t)?),
        IntegralRegion::OuterBoundary => Nodes::Surface(rule.boundary_nodes(domain.outer_radius)?),
    })
}

fn integrate_compiled(
    domain: &DomainConfig,
    region: IntegralRegion,
    rule: &QuadratureRule,
    tape: &Tape,
    t: f64,
) -> Result<Vec<f64>, GeometryError> {
    match nodes(domain, region, rule, t)? {
        Nodes::Surface(n) => integrate_tape(&n, tape, t),
        Nodes::Volume(n) => integrate_tape(&n, tape, t),
    }
}

/// Integrates expressions over a region at time `t`.
pub fn integrate_over(
    domain: &DomainConfig,
    region: IntegralRegion,
    rule: &QuadratureRule,
    exprs: &[Expr],
    t: f64,
) -> Result<Vec<f64>, GeometryError> {
    integrate_compiled(domain, region, rule, &Tape::compile(exprs), t)
}

/// Fourth-order central difference of `f` at `t`.
pub fn central_difference<E>(f: impl Fn(f64) -> Result<f64, E>, t: f64, h: f64) -> Result<f64, E> {
    let fm2 = f(t - 2.0 * h)?;
    let fm1 = f(t - h)?;
    let fp1 = f(t + h)?;
    let fp2 = f(t + 2.0 * h)?;
    Ok((8.0 * (fp1 - fm1) - (fp2 - fm2)) / (12.0 * h))
}

/// Two sides of an identity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gap {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

impl Gap {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        Gap {
            lhs,
            rhs,
            gap: (lhs - rhs).abs(),
        }
    }

    /// Gap divided by `max(1, |lhs|, |rhs|)`.
    pub fn relative(&self) -> f64 {
        self.gap / self.lhs.abs().max(self.rhs.abs()).max(1.0)
    }
}

/// `d/dt int density` (finite difference) against `int rate`.
pub fn moving_integral_gap(
    domain: &DomainConfig,
    region: IntegralRegion,
    rule: &QuadratureRule,
    density: &Expr,
    rate: &Expr,
    t: f64,
    h: f64,
) -> Result<Gap, IntegralError> {
    let tape = Tape::compile(std::slice::from_ref(density));
    let lhs = central_difference(|s| Ok::<_, GeometryError>(integrate_compiled(domain, region, rule, &tape, s)?[0]), t, h)?;
    let rhs = integrate_over(domain, region, rule, std::slice::from_ref(rate), t)?[0];
    Ok(Gap::new(lhs, rhs))
}

/// Maximum of `|V_surface - v . n|` over surface nodes.
pub fn motion_mismatch(chart: &SurfaceChart, v: &VectorField, rule: &QuadratureRule, t: f64) -> Result<f64, IntegralError> {
    let nodes = rule.surface_nodes(chart, t)?;
    let tape = Tape::compile(&v.c);
    let mut worst: f64 = 0.0;
    for node in &nodes {
        let vel = tape.eval(&crate::expr::Point::at(node.x, t))?;
        let vn = numeric::dot(&[vel[0], vel[1], vel[2]], &node.n);
        worst = worst.max((chart.normal_speed_at(node.x, t)? - vn).abs());
    }
    Ok(worst)
}

/// Transport theorem check with its motion diagnostic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransportReport {
    pub gap: Gap,
    pub motion_mismatch: f64,
}

/// Motion tolerance used by the transport and audit preconditions.
pub const MOTION_TOL: f64 = 1e-9;

/// Checks `d/dt int f = int (D_t f + (div v) f)` over a region moving with
/// `v` (surface divergence on the surface). The surface's normal speed must
/// equal `v . n`; for the shell, `v . n` must also vanish on the outer
/// boundary.
pub fn transport_check(
    domain: &DomainConfig,
    region: IntegralRegion,
    f: &Expr,
    v: &VectorField,
    rule: &QuadratureRule,
    t: f64,
    h: f64,
) -> Result<TransportReport, IntegralError> {
    let mut mismatch = match region {
        IntegralRegion::OuterBoundary => 0.0,
        _ => motion_mismatch(&domain.surface, v, rule, t)?,
    };
    if matches!(region, IntegralRegion::Shell | IntegralRegion::OuterBoundary) {
        let outer = rule.boundary_nodes(domain.outer_radius)?;
        let tape = Tape::compile(&v.c);
        for node in &outer {
            let vel = tape.eval(&crate::expr::Point::at(node.x, t))?;
            mismatch = mismatch.max(numeric::dot(&[vel[0], vel[1], vel[2]], &node.n).abs());
        }
    }
    if mismatch > MOTION_TOL {
        return Err(IntegralError::InconsistentMotion {
            mismatch,
            tol: MOTION_TOL,
        });
    }
    let divergence = match region {
        IntegralRegion::Surface => calculus::surface_divergence(v, &domain.surface),
        IntegralRegion::OuterBoundary => {
            let sphere = SurfaceChart::sphere(domain.outer_radius);
            calculus::surface_divergence(v, &sphere)
        }
        _ => calculus::div(v),
    };
    let rate = calculus::material_derivative(f, v) + divergence * f;
    let gap = moving_integral_gap(domain, region, rule, f, &rate, t, h)?;
    Ok(TransportReport {
        gap,
        motion_mismatch: mismatch,
    })
}

/// The three integration-by-parts formulas.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IbpKind {
    BulkA,
    BulkB,
    Surface,
}

impl IbpKind {
    pub const ALL: [IbpKind; 3] = [IbpKind::BulkA, IbpKind::BulkB, IbpKind::Surface];

    pub fn name(self) -> &'static str {
        match self {
            IbpKind::BulkA => "bulk_a",
            IbpKind::BulkB => "bulk_b",
            IbpKind::Surface => "surface",
        }
    }
}

impl fmt::Display for IbpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Evaluates both sides of the integration-by-parts formula for
/// `int (d_j f) g`; `j` is 0-based.
pub fn ibp_check(
    kind: IbpKind,
    domain: &DomainConfig,
    f: &Expr,
    g: &Expr,
    j: usize,
    rule: &QuadratureRule,
    t: f64,
) -> Result<Gap, IntegralError> {
    if j > 2 {
        return Err(IntegralError::Setting(format!("direction index {j} out of range")));
    }
    let var = Var::SPACE[j];
    let chart = &domain.surface;
    let n_j = chart.normal_field().c[j].clone();
    let fg = f * g;
    match kind {
        IbpKind::BulkA | IbpKind::BulkB => {
            let region = if kind == IbpKind::BulkA {
                IntegralRegion::Inner
            } else {
                IntegralRegion::Shell
            };
            let vol = integrate_over(domain, region, rule, &[f.derivative(var) * g, f * g.derivative(var)], t)?;
            let on_surface = integrate_over(domain, IntegralRegion::Surface, rule, &[&fg * &n_j], t)?[0];
            let rhs = if kind == IbpKind::BulkA {
                -vol[1] + on_surface
            } else {
                let x = VectorField::position();
                let outer_n = x.c[j].clone() / x.norm_sq().sqrt();
                let on_outer = integrate_over(domain, IntegralRegion::OuterBoundary, rule, &[&fg * outer_n], t)?[0];
                -vol[1] + on_outer - on_surface
            };
            Ok(Gap::new(vol[0], rhs))
        }
        IbpKind::Surface => {
            let df = calculus::tangential_grad(f, chart).c[j].clone();
            let dg = calculus::tangential_grad(g, chart).c[j].clone();
            let h = chart.mean_curvature_field();
            let v = integrate_over(domain, IntegralRegion::Surface, rule, &[df * g, f * dg, h * fg * n_j], t)?;
            Ok(Gap::new(v[0], -v[1] - v[2]))
        }
    }
}

/// Fixed corpus of `(f, g, j)` cases, `j` 0-based.
pub fn ibp_corpus() -> Vec<(Expr, Expr, usize)> {
    let cases: [(&str, &str, usize); 12] = [
        ("1", "1", 0),
        ("x1", "1", 0),
        ("x3", "x3", 2),
        ("x1*x2", "x3", 1),
        ("x1^2", "x2^2", 0),
        ("x1^3*x3", "1 + x2", 2),
        ("x2^4", "x1", 1),
        ("sin(x1)", "cos(x2)", 0),
        ("cos(x3)", "sin(x1 + x2)", 2),
        ("exp(x2/2)", "x3^2", 1),
        ("sin(x1*x3)", "x2", 2),
        ("x1*x2*x3", "cos(x1)", 0),
    ];
    cases
        .iter()
        .map(|(f, g, j)| {
            (
                crate::expr::parse(f).expect("static expression"),
                crate::expr::parse(g).expect("static expression"),
                *j,
            )
        })
        .collect()
}

/// The two first-law forms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FirstLawForm {
    /// `d/dt int rho e = int (Q~ - (div v) pi)`.
    Internal,
    /// `d/dt int (rho e - p(rho)) = int Q~`, with the barotropic pressure.
    Barotropic,
}

impl FirstLawForm {
    pub fn name(self) -> &'static str {
        match self {
            FirstLawForm::Internal => "internal",
            FirstLawForm::Barotropic => "barotropic",
        }
    }
}

/// Heat supply `Q~ = div q + e_D` (plus the heat jump on the surface).
pub fn heat_supply(sys: &SystemState, phase: Phase) -> Expr {
    let m = sys.material(phase);
    let s = sys.state(phase);
    let frame = sys.frame(phase);
    let mut supply = frame.div(&constitutive::heat_flux(m, s, frame)) + constitutive::dissipation_density(m, s, frame);
    if phase.is_surface() {
        supply = supply + sys.heat_jump();
    }
    supply
}

/// Continuity tolerance required by the first law.
pub const CONTINUITY_TOL: f64 = 1e-9;

fn max_continuity(sys: &SystemState, phase: Phase, rule: &QuadratureRule, t: f64) -> Result<f64, IntegralError> {
    let Some(rep) = residuals::residual_norms(sys, residuals::Equation::Continuity, phase, rule, t)? else {
        return Ok(0.0);
    };
    Ok(rep.norm_inf)
}

/// First-law check for one phase on `Lambda`, where `Lambda` is the cone
/// selected by `rule.cap` (or everything).
pub fn first_law_check(
    sys: &SystemState,
    phase: Phase,
    form: FirstLawForm,
    rule: &QuadratureRule,
    t: f64,
    h: f64,
) -> Result<Gap, IntegralError> {
    let worst = max_continuity(sys, phase, rule, t)?;
    if worst > CONTINUITY_TOL {
        return Err(IntegralError::Precondition(vec![Violation {
            what: format!("continuity residual of phase {phase}"),
            value: worst,
            tol: CONTINUITY_TOL,
            t,
        }]));
    }
    let m = sys.material(phase);
    let s = sys.state(phase);
    let frame = sys.frame(phase);
    let e = constitutive::internal_energy(m, s)?;
    let pi = constitutive::pressure(m, s)?;
    let supply = heat_supply(sys, phase);
    let (density, rate) = match form {
        FirstLawForm::Internal => (&s.rho * &e, supply - frame.div(&s.v) * pi),
        FirstLawForm::Barotropic => {
            let Eos::Barotropic { law } = &m.eos else {
                return Err(IntegralError::Setting(format!(
                    "barotropic first law needs a barotropic law for phase {phase}"
                )));
            };
            (&s.rho * &e - constitutive::compose_density(law, &s.rho), supply)
        }
    };
    moving_integral_gap(&sys.domain, IntegralRegion::of_phase(phase), rule, &density, &rate, t, h)
}

/// Global balance laws.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Law {
    Mass,
    Energy,
    Kinetic,
    Momentum,
}

impl Law {
    pub const ALL: [Law; 4] = [Law::Mass, Law::Energy, Law::Kinetic, Law::Momentum];

    pub fn name(self) -> &'static str {
        match self {
            Law::Mass => "mass",
            Law::Energy => "energy",
            Law::Kinetic => "kinetic",
            Law::Momentum => "momentum",
        }
    }
}

impl fmt::Display for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuditSettings {
    pub rule: QuadratureRule,
    /// Gauss-Legendre nodes in time.
    pub time_nodes: usize,
    /// Tolerance for the coupling, boundary and motion preconditions.
    pub precondition_tol: f64,
}

impl Default for AuditSettings {
    fn default() -> Self {
        AuditSettings {
            rule: QuadratureRule::new(16),
            time_nodes: 8,
            precondition_tol: 1e-9,
        }
    }
}

/// Both sides of a balance law over `[t1, t2]`. Residuals of the governing
/// equations enter the right side as manufactured sources, so a state
/// solving the system has zero source contribution.
#[derive(Clone, Debug, PartialEq)]
pub struct AuditReport {
    pub law: Law,
    pub t1: f64,
    pub t2: f64,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// Time integral of the manufactured sources included in `rhs`.
    pub sources: Vec<f64>,
}

impl AuditReport {
    pub fn gap(&self) -> f64 {
        self.lhs.iter().zip(&self.rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn scale(&self) -> f64 {
        self.lhs.iter().chain(&self.rhs).map(|v| v.abs()).fold(1.0, f64::max)
    }

    pub fn relative_gap(&self) -> f64 {
        self.gap() / self.scale()
    }
}

/// Per-phase integrands of a law: the stock, extra left-side rates and the
/// right-side rates.
struct Ledger {
    stock: [Vec<Expr>; 3],
    lhs_rate: [Vec<Expr>; 3],
    rhs_rate: [Vec<Expr>; 3],
}

fn ledger(sys: &SystemState, law: Law) -> Result<Ledger, IntegralError> {
    let per = |f: &dyn Fn(Phase) -> Result<Vec<Expr>, IntegralError>| -> Result<[Vec<Expr>; 3], IntegralError> {
        Ok([f(Phase::A)?, f(Phase::B)?, f(Phase::S)?])
    };
    let none = [Vec::new(), Vec::new(), Vec::new()];
    Ok(match law {
        Law::Mass => Ledger {
            stock: per(&|p| Ok(vec![sys.state(p).rho.clone()]))?,
            lhs_rate: none,
            rhs_rate: per(&|p| Ok(vec![residuals::continuity_field(sys, p)]))?,
        },
        Law::Energy => Ledger {
            stock: per(&|p| Ok(vec![constitutive::total_energy_density(sys.material(p), sys.state(p))?]))?,
            lhs_rate: none,
            rhs_rate: per(&|p| Ok(vec![residuals::conservative_energy_field(sys, p)?]))?,
        },
        Law::Kinetic => Ledger {
            stock: per(&|p| Ok(vec![constitutive::kinetic_density(sys.state(p))]))?,
            lhs_rate: per(&|p| Ok(vec![constitutive::dissipation_density(sys.material(p), sys.state(p), sys.frame(p))]))?,
            rhs_rate: per(&|p| {
                let s = sys.state(p);
                let m = sys.material(p);
                let work = constitutive::work_density(m, s, sys.frame(p))?;
                let mom = residuals::momentum_field(sys, p)?;
                let cont = residuals::continuity_field(sys, p);
                Ok(vec![work + mom.dot(&s.v) + s.v.norm_sq() * 0.5 * cont])
            })?,
        },
        Law::Momentum => Ledger {
            stock: per(&|p| Ok(sys.state(p).v.scale(&sys.state(p).rho).to_vec()))?,
            lhs_rate: none,
            rhs_rate: per(&|p| Ok(residuals::conservative_momentum_field(sys, p)?.to_vec()))?,
        },
    })
}

/// Source part of the right-side rate (everything except the work term).
fn source_rate(sys: &SystemState, law: Law, phase: Phase) -> Result<Vec<Expr>, IntegralError> {
    Ok(match law {
        Law::Kinetic => {
            let s = sys.state(phase);
            let mom = residuals::momentum_field(sys, phase)?;
            vec![mom.dot(&s.v) + s.v.norm_sq() * 0.5 * residuals::continuity_field(sys, phase)]
        }
        _ => ledger_rate_only(sys, law, phase)?,
    })
}

fn ledger_rate_only(sys: &SystemState, law: Law, phase: Phase) -> Result<Vec<Expr>, IntegralError> {
    Ok(match law {
        Law::Mass => vec![residuals::continuity_field(sys, phase)],
        Law::Energy => vec![residuals::conservative_energy_field(sys, phase)?],
        Law::Momentum => residuals::conservative_momentum_field(sys, phase)?.to_vec(),
        Law::Kinetic => unreachable!("handled by source_rate"),
    })
}

fn sum_phases(
    sys: &SystemState,
    rule: &QuadratureRule,
    tapes: &[Option<Tape>; 3],
    k: usize,
    t: f64,
) -> Result<Vec<f64>, IntegralError> {
    let mut total = vec![0.0; k];
    for (phase, tape) in Phase::ALL.iter().zip(tapes) {
        let Some(tape) = tape else { continue };
        let v = integrate_compiled(&sys.domain, IntegralRegion::of_phase(*phase), rule, tape, t)?;
        for i in 0..k {
            total[i] += v[i];
        }
    }
    Ok(total)
}

fn compile(parts: &[Vec<Expr>; 3]) -> [Option<Tape>; 3] {
    parts.each_ref().map(|p| if p.is_empty() { None } else { Some(Tape::compile(p)) })
}

/// Checks the coupling/boundary conditions and the surface motion at `t`.
pub fn audit_preconditions(sys: &SystemState, law: Law, settings: &AuditSettings, t: f64) -> Result<Vec<Violation>, IntegralError> {
    let tol = settings.precondition_tol;
    let mut out = Vec::new();
    let boundary = residuals::boundary_residual(sys, &settings.rule, t)?;
    for (name, value) in boundary.conditions {
        let relevant = match law {
            Law::Mass => !name.contains("theta") && !name.starts_with("P("),
            Law::Kinetic | Law::Momentum => !name.contains("theta"),
            Law::Energy => true,
        };
        if relevant && value > tol {
            out.push(Violation {
                what: name.to_string(),
                value,
                tol,
                t,
            });
        }
    }
    let motion = motion_mismatch(sys.chart(), &sys.state(Phase::S).v, &settings.rule, t)?;
    if motion > tol {
        out.push(Violation {
            what: "surface normal speed minus v_S.n".into(),
            value: motion,
            tol,
            t,
        });
    }
    if law == Law::Momentum {
        if sys.slip().r() != 1.0 {
            out.push(Violation {
                what: "momentum law needs r = 1; r".into(),
                value: 0.0,
                tol: 0.0,
                t,
            });
        }
        let traction = residuals::outer_traction(sys, &settings.rule, t)?;
        let mag = numeric::norm(&traction);
        if mag > tol {
            out.push(Violation {
                what: "outer boundary traction".into(),
                value: mag,
                tol,
                t,
            });
        }
    }
    Ok(out)
}

/// Evaluates both sides of a balance law over `[t1, t2]`.
pub fn conservation_audit(sys: &SystemState, law: Law, t1: f64, t2: f64, settings: &AuditSettings) -> Result<AuditReport, IntegralError> {
    if !(t2 > t1) {
        return Err(IntegralError::Setting(format!("empty window [{t1}, {t2}]")));
    }
    if settings.time_nodes < 3 {
        return Err(IntegralError::Setting("at least 3 time nodes are required".into()));
    }
    let (ts, ws) = gauss_legendre_on(settings.time_nodes, t1, t2);
    let mut violations = Vec::new();
    for &t in [t1, t2].iter().chain(&ts) {
        violations.extend(audit_preconditions(sys, law, settings, t)?);
    }
    if !violations.is_empty() {
        return Err(IntegralError::Precondition(violations));
    }

    let led = ledger(sys, law)?;
    let k = led.stock[0].len();
    let rule = &settings.rule;
    let stock = compile(&led.stock);
    let lhs_rate = compile(&led.lhs_rate);
    let rhs_rate = compile(&led.rhs_rate);
    let sources = compile(&[
        source_rate(sys, law, Phase::A)?,
        source_rate(sys, law, Phase::B)?,
        source_rate(sys, law, Phase::S)?,
    ]);

    let mut lhs = sum_phases(sys, rule, &stock, k, t2)?;
    let mut rhs = sum_phases(sys, rule, &stock, k, t1)?;
    let mut src = vec![numeric::CompensatedSum::default(); k];
    let mut lhs_acc = vec![numeric::CompensatedSum::default(); k];
    let mut rhs_acc = vec![numeric::CompensatedSum::default(); k];
    for (&t, &w) in ts.iter().zip(&ws) {
        let l = if led.lhs_rate[0].is_empty() {
            vec![0.0; k]
        } else {
            sum_phases(sys, rule, &lhs_rate, k, t)?
        };
        let r = sum_phases(sys, rule, &rhs_rate, k, t)?;
        let s = sum_phases(sys, rule, &sources, k, t)?;
        for i in 0..k {
            lhs_acc[i].add(w * l[i]);
            rhs_acc[i].add(w * r[i]);
            src[i].add(w * s[i]);
        }
    }
    for i in 0..k {
        lhs[i] += lhs_acc[i].value();
        rhs[i] += rhs_acc[i].value();
    }
    Ok(AuditReport {
        law,
        t1,
        t2,
        lhs,
        rhs,
        sources: src.iter().map(|s| s.value()).collect(),
    })
}

/// Writes `law,t1,t2,lhs,rhs,gap,tol,pass`; vector laws get one row per
/// component.
pub fn write_audit_csv<W: Write>(w: &mut W, rows: &[(AuditReport, f64)]) -> io::Result<()> {
    writeln!(w, "law,t1,t2,lhs,rhs,gap,tol,pass")?;
    for (r, tol) in rows {
        for i in 0..r.lhs.len() {
            let name = if r.lhs.len() == 1 {
                r.law.to_string()
            } else {
                format!("{}_{}", r.law, i + 1)
            };
            let gap = (r.lhs[i] - r.rhs[i]).abs();
            writeln!(
                w,
                "{},{},{},{:e},{:e},{:e},{:e},{}",
                name,
                r.t1,
                r.t2,
                r.lhs[i],
                r.rhs[i],
                gap,
                tol,
                gap <= tol * r.scale()
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::geometry::{Slip, SurfaceKind};
    use std::f64::consts::PI;

    fn expanding() -> DomainConfig {
        let chart = SurfaceChart::new(SurfaceKind::Sphere {
            radius: parse("1+t").unwrap(),
        });
        DomainConfig::new(4.0, chart, Slip::NoSlip)
    }

    #[test]
    fn central_difference_is_fourth_order() {
        let f = |t: f64| Ok::<_, ()>(t.sin());
        let e1 = (central_difference(f, 0.3, 0.1).unwrap() - 0.3f64.cos()).abs();
        let e2 = (central_difference(f, 0.3, 0.05).unwrap() - 0.3f64.cos()).abs();
        let ratio = e1 / e2;
        assert!((ratio - 16.0).abs() < 0.5, "{ratio}");
    }

    #[test]
    fn surface_transport_expanding_sphere() {
        let dom = expanding();
        let n = dom.surface.normal_field().clone();
        let t = 0.5;
        let rep = transport_check(&dom, IntegralRegion::Surface, &Expr::one(), &n, &QuadratureRule::new(12), t, 1e-3).unwrap();
        assert!((rep.gap.rhs - 8.0 * PI * 1.5).abs() < 1e-9);
        assert!(rep.gap.gap < 1e-8, "{:?}", rep);
    }

    #[test]
    fn inner_transport_expanding_ball() {
        let dom = expanding();
        let v = VectorField::position().scale(&parse("1/(1+t)").unwrap());
        let rep = transport_check(&dom, IntegralRegion::Inner, &Expr::one(), &v, &QuadratureRule::new(12), 0.5, 1e-3).unwrap();
        assert!((rep.gap.rhs - 4.0 * PI * 2.25).abs() < 1e-9);
        assert!(rep.gap.gap < 1e-8, "{:?}", rep);
    }

    #[test]
    fn static_transport_is_exact() {
        let dom = DomainConfig::new(3.0, SurfaceChart::sphere(1.0), Slip::NoSlip);
        let f = parse("x1^2 + x3").unwrap();
        let rep = transport_check(&dom, IntegralRegion::Shell, &f, &VectorField::zero(), &QuadratureRule::new(8), 0.0, 1e-3).unwrap();
        assert_eq!(rep.gap.gap, 0.0);
    }

    #[test]
    fn inconsistent_motion_is_reported() {
        let dom = expanding();
        let err = transport_check(&dom, IntegralRegion::Surface, &Expr::one(), &VectorField::zero(), &QuadratureRule::new(8), 0.5, 1e-3);
        match err {
            Err(IntegralError::InconsistentMotion { mismatch, .. }) => assert!((mismatch - 1.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ibp_examples() {
        let dom = DomainConfig::new(3.0, SurfaceChart::sphere(1.0), Slip::NoSlip);
        let rule = QuadratureRule::new(16);
        let one = Expr::one();
        for j in 0..3 {
            let g = ibp_check(IbpKind::Surface, &dom, &one, &one, j, &rule, 0.0).unwrap();
            assert!(g.gap < 1e-8);
        }
        let g = ibp_check(IbpKind::BulkA, &dom, &Expr::x1(), &one, 0, &rule, 0.0).unwrap();
        assert!((g.lhs - 4.0 * PI / 3.0).abs() < 1e-10);
        assert!(g.gap < 1e-9);
        let g = ibp_check(IbpKind::Surface, &dom, &Expr::x3(), &Expr::x3(), 2, &rule, 0.0).unwrap();
        assert!(g.gap < 1e-8);
    }

    #[test]
    fn ibp_corpus_on_ellipsoid() {
        let chart = SurfaceChart::new(SurfaceKind::Ellipsoid {
            axes: [1.0, 1.0, 2.0],
            scale: Expr::one(),
        });
        let dom = DomainConfig::new(3.0, chart, Slip::NoSlip);
        let rule = QuadratureRule::new(24);
        for (f, g, j) in ibp_corpus() {
            for kind in IbpKind::ALL {
                let gap = ibp_check(kind, &dom, &f, &g, j, &rule, 0.0).unwrap();
                assert!(gap.gap < 1e-8, "{kind} {gap:?}");
            }
        }
    }
}
