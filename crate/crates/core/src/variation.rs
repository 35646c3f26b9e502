//! Dissipation functionals and the check that their Gateaux derivatives
//! equal the divergence-form forces and heat terms.

use std::io::{self, Write};

use thiserror::Error;

use crate::calculus;
use crate::constitutive::{self, ConstitutiveError, Phase};
use crate::expr::{EvalError, Expr, VectorField};
use crate::fixtures::{self, FieldRng};
use crate::geometry::{eval_at_nodes, DomainConfig, GeometryError, QuadratureRule, Slip};
use crate::numeric::{self, Exec};
use crate::residuals::{ResidualError, SystemState};
use crate::verify_integral::{integrate_over, IntegralRegion};

#[derive(Debug, Error)]
pub enum VariationError {
    #[error("blending width {width} exceeds the shell thickness {shell}")]
    WidthTooLarge { width: f64, shell: f64 },
    #[error("variation is not admissible: {what} = {value:e} (tolerance {tol:e})")]
    NotAdmissible { what: &'static str, value: f64, tol: f64 },
    #[error(transparent)]
    Residual(#[from] ResidualError),
    #[error(transparent)]
    Constitutive(#[from] ConstitutiveError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Admissibility tolerance at the quadrature nodes.
pub const ADMISSIBLE_TOL: f64 = 1e-10;

/// Free data a variation is built from. Only the values of the surface
/// fields on the surface matter.
#[derive(Clone, Debug)]
pub struct VariationSeeds {
    pub phi_surface: VectorField,
    pub phi_inner: VectorField,
    pub phi_outer: VectorField,
    pub psi_surface: Expr,
    pub psi_inner: Expr,
    pub psi_outer: Expr,
}

impl VariationSeeds {
    pub fn random(rng: &mut FieldRng) -> Self {
        VariationSeeds {
            phi_surface: rng.smooth_vector(1.0, false),
            phi_inner: rng.smooth_vector(1.0, false),
            phi_outer: rng.smooth_vector(1.0, false),
            psi_surface: rng.smooth_scalar(1.0, false),
            psi_inner: rng.smooth_scalar(1.0, false),
            psi_outer: rng.smooth_scalar(1.0, false),
        }
    }
}

/// Velocity variations `phi` and temperature variations `psi` for the
/// phases `A, B, S`, frozen at one time.
#[derive(Clone, Debug)]
pub struct AdmissibleVariation {
    pub phi: [VectorField; 3],
    pub psi: [Expr; 3],
    pub slip: Slip,
    pub t: f64,
}

impl AdmissibleVariation {
    pub fn scaled(&self, s: f64) -> Self {
        let k = Expr::constant(s);
        AdmissibleVariation {
            phi: self.phi.each_ref().map(|p| p.scale(&k)),
            psi: self.psi.each_ref().map(|p| p * &k),
            slip: self.slip,
            t: self.t,
        }
    }

    pub fn phi(&self, phase: Phase) -> &VectorField {
        &self.phi[phase_index(phase)]
    }

    pub fn psi(&self, phase: Phase) -> &Expr {
        &self.psi[phase_index(phase)]
    }
}

fn phase_index(phase: Phase) -> usize {
    match phase {
        Phase::A => 0,
        Phase::B => 1,
        Phase::S => 2,
    }
}

/// Shell thickness and inner radius of the domain at `t`, sampled at the
/// surface nodes of `rule`.
fn thicknesses(domain: &DomainConfig, rule: &QuadratureRule, t: f64) -> Result<(f64, f64), GeometryError> {
    let nodes = rule.surface_nodes(&domain.surface, t)?;
    let radii: Vec<f64> = nodes.iter().map(|n| numeric::norm(&n.x)).collect();
    let inner = radii.iter().cloned().fold(f64::INFINITY, f64::min);
    let outer = radii.iter().cloned().fold(0.0, f64::max);
    Ok((domain.outer_radius - outer, inner))
}

/// Builds a variation satisfying the transmission conditions on the
/// surface, the Dirichlet condition for `phi_B` and the Neumann condition
/// for `psi_B` on the outer sphere. `width` defaults to
/// `min(0.3 shell, 0.3 inner radius)`.
pub fn make_admissible(
    seeds: &VariationSeeds,
    slip: Slip,
    domain: &DomainConfig,
    width: Option<f64>,
    t: f64,
) -> Result<AdmissibleVariation, VariationError> {
    let (shell, inner) = thicknesses(domain, &QuadratureRule::new(16), t)?;
    let width = match width {
        Some(w) if w > shell => return Err(VariationError::WidthTooLarge { width: w, shell }),
        Some(w) => w,
        None => (0.3 * shell).min(0.3 * inner),
    };
    let chart = &domain.surface;
    let level = chart.level_set().at_time(t);
    let n = chart.normal_field().map(|c| c.at_time(t));
    let blend = (-(&level / width).square()).exp();

    let phi_s = &seeds.phi_surface;
    let normal_part = n.scale(&phi_s.dot(&n));
    let tangential = phi_s.sub(&normal_part);
    let phi_gamma = normal_part.add(&tangential.scale(&Expr::constant(slip.r())));
    let near = phi_gamma.scale(&blend);

    let r2 = VectorField::position().norm_sq();
    let rs = fixtures::profile_extension(chart).at_time(t);
    let outer2 = domain.outer_radius * domain.outer_radius;
    let cutoff = (outer2 - &r2) / (outer2 - rs.square());
    let phi_a = near.add(&seeds.phi_inner.scale(&level));
    let phi_b = near.add(&seeds.phi_outer.scale(&level)).scale(&cutoff);

    let psi_s = seeds.psi_surface.clone();
    let psi_a = &blend * &psi_s + &level * &seeds.psi_inner;
    let psi_b_raw = &blend * &psi_s + &level * &seeds.psi_outer;
    let frozen = crate::geometry::SurfaceChart::new(crate::geometry::SurfaceKind::Profile(chart.profile().at_time(t)));
    let psi_b = fixtures::neumann_remap(&psi_b_raw, &frozen, domain.outer_radius);

    Ok(AdmissibleVariation {
        phi: [phi_a, phi_b, phi_s.clone()],
        psi: [psi_a, psi_b, psi_s],
        slip,
        t,
    })
}

/// Largest violation of each admissibility condition at the nodes of `rule`.
pub fn admissibility_residuals(
    var: &AdmissibleVariation,
    domain: &DomainConfig,
    rule: &QuadratureRule,
) -> Result<Vec<(&'static str, f64)>, VariationError> {
    let t = var.t;
    let chart = &domain.surface;
    let n = chart.normal_field();
    let p = chart.projection_field();
    let r = Expr::constant(var.slip.r());
    let [pa, pb, ps] = &var.phi;
    let [qa, qb, qs] = &var.psi;
    let surface_exprs = vec![
        pa.sub(ps).dot(n),
        pb.sub(ps).dot(n),
        p.apply(&pa.sub(&ps.scale(&r))).norm_sq().sqrt(),
        p.apply(&pb.sub(&ps.scale(&r))).norm_sq().sqrt(),
        qa - qs,
        qb - qs,
    ];
    let names = [
        "(phi_A - phi_S).n",
        "(phi_B - phi_S).n",
        "P(phi_A - r phi_S)",
        "P(phi_B - r phi_S)",
        "psi_A - psi_S",
        "psi_B - psi_S",
    ];
    let rows = eval_at_nodes(&rule.surface_nodes(chart, t)?, &surface_exprs, t)?;
    let mut out: Vec<(&'static str, f64)> = names
        .iter()
        .enumerate()
        .map(|(i, &name)| (name, rows.iter().fold(0.0_f64, |m, row| m.max(row[i].abs()))))
        .collect();

    let outer_n = VectorField::position().scale(&Expr::constant(1.0 / domain.outer_radius));
    let boundary_exprs = vec![pb.norm_sq().sqrt(), calculus::directional(&outer_n, qb)];
    let rows = eval_at_nodes(&rule.boundary_nodes(domain.outer_radius)?, &boundary_exprs, t)?;
    for (i, name) in ["phi_B on outer boundary", "(n.grad) psi_B on outer boundary"].into_iter().enumerate() {
        out.push((name, rows.iter().fold(0.0_f64, |m, row| m.max(row[i].abs()))));
    }
    Ok(out)
}

pub fn check_admissible(var: &AdmissibleVariation, domain: &DomainConfig, rule: &QuadratureRule) -> Result<(), VariationError> {
    for (what, value) in admissibility_residuals(var, domain, rule)? {
        if !(value <= ADMISSIBLE_TOL) {
            return Err(VariationError::NotAdmissible {
                what,
                value,
                tol: ADMISSIBLE_TOL,
            });
        }
    }
    Ok(())
}

/// The dissipation functionals.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Functional {
    /// `sum int -mu/2 |D(v)|^2 - lambda/2 |div v|^2`.
    Viscous,
    /// `sum int (div v) pi`.
    Work,
    /// Viscous plus work.
    ViscousWork,
    /// `sum int -kappa/2 |grad theta|^2`.
    Thermal,
}

fn density(sys: &SystemState, functional: Functional, phase: Phase) -> Result<Expr, VariationError> {
    let m = sys.material(phase);
    let s = sys.state(phase);
    let frame = sys.frame(phase);
    let viscous = || -0.5 * constitutive::dissipation_density(m, s, frame);
    let work = || constitutive::work_density(m, s, frame);
    Ok(match functional {
        Functional::Viscous => viscous(),
        Functional::Work => work()?,
        Functional::ViscousWork => viscous() + work()?,
        Functional::Thermal => -0.5 * constitutive::thermal_density(m, s, frame),
    })
}

fn frozen(sys: &SystemState, t: f64) -> SystemState {
    let mut out = sys.clone();
    for phase in Phase::ALL {
        let st = out.state_mut(phase);
        st.rho = st.rho.at_time(t);
        st.v = st.v.map(|c| c.at_time(t));
        st.theta = st.theta.at_time(t);
        st.pi = st.pi.as_ref().map(|e| e.at_time(t));
        st.e = st.e.as_ref().map(|e| e.at_time(t));
        st.entropy = st.entropy.as_ref().map(|e| e.at_time(t));
    }
    out
}

fn perturbed(sys: &SystemState, var: &AdmissibleVariation, functional: Functional, eps: f64) -> SystemState {
    let mut out = sys.clone();
    let k = Expr::constant(eps);
    for phase in Phase::ALL {
        let st = out.state_mut(phase);
        if functional == Functional::Thermal {
            st.theta = &st.theta + &k * var.psi(phase);
        } else {
            st.v = st.v.add(&var.phi(phase).scale(&k));
        }
    }
    out
}

fn integrate_phases(sys: &SystemState, rule: &QuadratureRule, per_phase: &[Vec<Expr>; 3], t: f64) -> Result<Vec<f64>, VariationError> {
    let mut total = vec![0.0; per_phase[0].len()];
    for phase in Phase::ALL {
        let v = integrate_over(&sys.domain, IntegralRegion::of_phase(phase), rule, &per_phase[phase_index(phase)], t)?;
        for (acc, x) in total.iter_mut().zip(v) {
            *acc += x;
        }
    }
    Ok(total)
}

/// Value of a functional at `t`.
pub fn functional_value(sys: &SystemState, functional: Functional, rule: &QuadratureRule, t: f64) -> Result<f64, VariationError> {
    let sys = frozen(sys, t);
    let per = [
        vec![density(&sys, functional, Phase::A)?],
        vec![density(&sys, functional, Phase::B)?],
        vec![density(&sys, functional, Phase::S)?],
    ];
    Ok(integrate_phases(&sys, rule, &per, t)?[0])
}

/// Both sides of a Gateaux identity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GateauxGap {
    /// Fourth-order central difference of the functional in `eps`.
    pub side_a: f64,
    /// Integral of the force (or heat term) against the variation.
    pub side_b: f64,
}

impl GateauxGap {
    pub fn gap(&self) -> f64 {
        (self.side_a - self.side_b).abs()
    }

    pub fn relative(&self) -> f64 {
        let scale = self.side_a.abs().max(self.side_b.abs());
        if scale == 0.0 {
            0.0
        } else {
            self.gap() / scale
        }
    }
}

/// Step in `eps`. The functionals are quadratic in `eps`, so the difference
/// quotient is exact up to rounding for any step.
pub const EPS_STEP: f64 = 0.125;

fn difference_side(
    sys: &SystemState,
    var: &AdmissibleVariation,
    functional: Functional,
    rule: &QuadratureRule,
    h: f64,
) -> Result<f64, VariationError> {
    let t = var.t;
    let steps = [h, -h, 2.0 * h, -2.0 * h];
    let mut per: [Vec<Expr>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for eps in steps {
        let p = perturbed(sys, var, functional, eps);
        for phase in Phase::ALL {
            per[phase_index(phase)].push(density(&p, functional, phase)?);
        }
    }
    let e = integrate_phases(sys, rule, &per, t)?;
    Ok((8.0 * (e[0] - e[1]) - (e[2] - e[3])) / (12.0 * h))
}

/// Gateaux derivative of the functional along `var` by finite differences
/// with step `h`.
pub fn gateaux_difference(
    sys: &SystemState,
    var: &AdmissibleVariation,
    functional: Functional,
    rule: &QuadratureRule,
    h: f64,
) -> Result<f64, VariationError> {
    difference_side(&frozen(sys, var.t), var, functional, rule, h)
}

/// Force densities: `div T` in the bulk and
/// `div_G T_S + T~_B n - T~_A n` on the surface.
pub fn forces(sys: &SystemState) -> Result<[VectorField; 3], VariationError> {
    let mut out = Vec::with_capacity(3);
    for phase in Phase::ALL {
        let m = sys.material(phase);
        let s = sys.state(phase);
        let frame = sys.frame(phase);
        let mut f = frame.div_tensor(&constitutive::stress(m, s, frame)?);
        if phase.is_surface() {
            f = f.add(&sys.traction_jump()?);
        }
        out.push(f);
    }
    Ok(out.try_into().expect("three phases"))
}

/// Heat terms: `div(kappa grad theta)` in the bulk and
/// `div_G(kappa_S grad_G theta_S) + q_B . n - q_A . n` on the surface.
pub fn heat_terms(sys: &SystemState) -> [Expr; 3] {
    Phase::ALL.map(|phase| {
        let m = sys.material(phase);
        let s = sys.state(phase);
        let frame = sys.frame(phase);
        let mut q = frame.div(&constitutive::heat_flux(m, s, frame));
        if phase.is_surface() {
            q = q + sys.heat_jump();
        }
        q
    })
}

fn prepare(sys: &SystemState, var: &AdmissibleVariation, rule: &QuadratureRule) -> Result<SystemState, VariationError> {
    if sys.slip() != var.slip {
        return Err(VariationError::NotAdmissible {
            what: "slip flag of variation and state",
            value: (sys.slip().r() - var.slip.r()).abs(),
            tol: 0.0,
        });
    }
    check_admissible(var, &sys.domain, rule)?;
    Ok(frozen(sys, var.t))
}

/// Velocity identity: derivative of the viscous-plus-work functional
/// against the force integral.
pub fn gateaux_gap_velocity(sys: &SystemState, var: &AdmissibleVariation, rule: &QuadratureRule) -> Result<GateauxGap, VariationError> {
    let sys = prepare(sys, var, rule)?;
    let side_a = difference_side(&sys, var, Functional::ViscousWork, rule, EPS_STEP)?;
    let f = forces(&sys)?;
    let per = Phase::ALL.map(|p| vec![f[phase_index(p)].dot(var.phi(p))]);
    let side_b = integrate_phases(&sys, rule, &per, var.t)?[0];
    Ok(GateauxGap { side_a, side_b })
}

/// Temperature identity: derivative of the thermal functional against the
/// heat-term integral.
pub fn gateaux_gap_temperature(sys: &SystemState, var: &AdmissibleVariation, rule: &QuadratureRule) -> Result<GateauxGap, VariationError> {
    let sys = prepare(sys, var, rule)?;
    let side_a = difference_side(&sys, var, Functional::Thermal, rule, EPS_STEP)?;
    let q = heat_terms(&sys);
    let per = Phase::ALL.map(|p| vec![&q[phase_index(p)] * var.psi(p)]);
    let side_b = integrate_phases(&sys, rule, &per, var.t)?[0];
    Ok(GateauxGap { side_a, side_b })
}

/// Which identity a suite row belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Theorem {
    Velocity,
    Temperature,
}

impl Theorem {
    pub fn name(self) -> &'static str {
        match self {
            Theorem::Velocity => "forces",
            Theorem::Temperature => "heat",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VariationRow {
    pub theorem: Theorem,
    pub slip: Slip,
    pub variation_id: usize,
    pub gap: GateauxGap,
}

/// Runs `count` random variations of one state for both identities.
/// Variation `i` draws from stream `i` of `seed`, so rows do not depend on
/// scheduling.
pub fn variation_suite(
    sys: &SystemState,
    count: usize,
    seed: u64,
    rule: &QuadratureRule,
    t: f64,
) -> Result<Vec<VariationRow>, VariationError> {
    let ids: Vec<usize> = (0..count).collect();
    let per: Vec<Result<Vec<VariationRow>, VariationError>> = Exec::current().map(&ids, |&i| {
        let mut rng = FieldRng::for_item(seed, i as u64);
        let seeds = VariationSeeds::random(&mut rng);
        let var = make_admissible(&seeds, sys.slip(), &sys.domain, None, t)?;
        Ok(vec![
            VariationRow {
                theorem: Theorem::Velocity,
                slip: var.slip,
                variation_id: i,
                gap: gateaux_gap_velocity(sys, &var, rule)?,
            },
            VariationRow {
                theorem: Theorem::Temperature,
                slip: var.slip,
                variation_id: i,
                gap: gateaux_gap_temperature(sys, &var, rule)?,
            },
        ])
    });
    let mut rows = Vec::with_capacity(2 * count);
    for r in per {
        rows.extend(r?);
    }
    Ok(rows)
}

/// Writes `theorem,r,variation_id,side_a,side_b,gap,pass`; `gap` is relative.
pub fn write_variation_csv<W: Write>(w: &mut W, rows: &[VariationRow], tol: f64) -> io::Result<()> {
    writeln!(w, "theorem,r,variation_id,side_a,side_b,gap,pass")?;
    for row in rows {
        let gap = row.gap.relative();
        writeln!(
            w,
            "{},{},{},{:e},{:e},{:e},{}",
            row.theorem.name(),
            row.slip.r(),
            row.variation_id,
            row.gap.side_a,
            row.gap.side_b,
            gap,
            gap <= tol
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::{Eos, PhaseMaterial, PhaseState};
    use crate::expr::parse;
    use crate::fixtures::ChartName;
    use crate::geometry::SurfaceChart;

    fn rule() -> QuadratureRule {
        QuadratureRule::new(12)
    }

    fn system(states: [PhaseState; 3], kappa: [f64; 3], slip: Slip) -> SystemState {
        let mats = [Phase::A, Phase::B, Phase::S].map(|p| {
            let k = kappa[phase_index(p)];
            PhaseMaterial::new(p, 0.6, 0.3, k, Eos::Explicit).unwrap()
        });
        SystemState::new(DomainConfig::new(3.0, SurfaceChart::sphere(1.0), slip), mats, states)
    }

    fn random_var(seed: u64, sys: &SystemState) -> AdmissibleVariation {
        let seeds = VariationSeeds::random(&mut FieldRng::new(seed));
        make_admissible(&seeds, sys.slip(), &sys.domain, None, 0.0).unwrap()
    }

    #[test]
    fn zero_state_gives_zero_sides() {
        let rest = PhaseState::at_rest(1.0, 1.0).with_pressure(Expr::zero());
        let sys = system([rest.clone(), rest.clone(), rest], [1.0; 3], Slip::NoSlip);
        let g = gateaux_gap_velocity(&sys, &random_var(1, &sys), &rule()).unwrap();
        assert!(g.side_a.abs() < 1e-14 && g.side_b.abs() < 1e-14, "{g:?}");
        let g = gateaux_gap_temperature(&sys, &random_var(1, &sys), &rule()).unwrap();
        assert!(g.side_a.abs() < 1e-14 && g.side_b.abs() < 1e-14, "{g:?}");
    }

    #[test]
    fn constant_pressures() {
        let p = |v: f64| PhaseState::at_rest(1.0, 1.0).with_pressure(Expr::constant(v));
        for slip in [Slip::NoSlip, Slip::Slip] {
            let sys = system([p(2.0), p(0.5), p(-0.3)], [0.0; 3], slip);
            let g = gateaux_gap_velocity(&sys, &random_var(2, &sys), &QuadratureRule::new(16)).unwrap();
            assert!(g.gap() <= 1e-8, "{g:?}");
            assert!(g.side_a.abs() > 1e-3);
        }
    }

    #[test]
    fn linear_temperature_with_equal_conductivities() {
        let theta = parse("x3").unwrap();
        let mut states = [PhaseState::at_rest(1.0, 1.0), PhaseState::at_rest(1.0, 1.0), PhaseState::at_rest(1.0, 1.0)];
        for s in &mut states {
            s.theta = theta.clone();
        }
        states[1].theta = fixtures::neumann_remap(&theta, &SurfaceChart::sphere(1.0), 3.0);
        let sys = system(states, [0.8, 0.8, 0.0], Slip::NoSlip);
        let heat = heat_terms(&frozen(&sys, 0.0));
        for x in [[0.6, 0.0, 0.8], [0.0, 1.0, 0.0], [0.3, 0.2, 0.1]] {
            let q = heat[0].eval(&crate::expr::Point::at(x, 0.0)).unwrap();
            assert!(q.abs() < 1e-14);
        }
        for x in [[0.6, 0.0, 0.8], [0.0, 1.0, 0.0]] {
            let q = heat[2].eval(&crate::expr::Point::at(x, 0.0)).unwrap();
            assert!(q.abs() < 1e-14);
        }
        let g = gateaux_gap_temperature(&sys, &random_var(3, &sys), &QuadratureRule::new(16)).unwrap();
        assert!(g.gap() <= 1e-8, "{g:?}");
    }

    #[test]
    fn quadratic_temperature_jump() {
        let theta = parse("x1^2 + x2^2 + x3^2").unwrap();
        let mut states = [PhaseState::at_rest(1.0, 1.0), PhaseState::at_rest(1.0, 1.0), PhaseState::at_rest(1.0, 1.0)];
        for s in &mut states {
            s.theta = theta.clone();
        }
        states[1].theta = fixtures::neumann_remap(&theta, &SurfaceChart::sphere(1.0), 3.0);
        let sys = system(states, [1.0, 2.0, 0.0], Slip::NoSlip);
        let heat = heat_terms(&frozen(&sys, 0.0));
        let v = heat[2].eval(&crate::expr::Point::new(0.0, 0.6, 0.8, 0.0)).unwrap();
        assert!((v - 2.0).abs() < 1e-12, "{v}");
        let g = gateaux_gap_temperature(&sys, &random_var(4, &sys), &QuadratureRule::new(16)).unwrap();
        assert!(g.gap() <= 1e-7, "{g:?}");
    }

    #[test]
    fn normal_seed_without_slip_is_normal() {
        let sys = system(
            [PhaseState::at_rest(1.0, 1.0), PhaseState::at_rest(1.0, 1.0), PhaseState::at_rest(1.0, 1.0)],
            [0.0; 3],
            Slip::NoSlip,
        );
        let n = sys.chart().normal_field().clone();
        let tangent = VectorField::new(-Expr::x2(), Expr::x1(), Expr::zero());
        for (seed, normal) in [(n.clone(), true), (tangent, false)] {
            let seeds = VariationSeeds {
                phi_surface: seed,
                phi_inner: VectorField::zero(),
                phi_outer: VectorField::zero(),
                psi_surface: Expr::zero(),
                psi_inner: Expr::zero(),
                psi_outer: Expr::zero(),
            };
            let var = make_admissible(&seeds, Slip::NoSlip, &sys.domain, None, 0.0).unwrap();
            let p = crate::expr::Point::new(0.0, 0.6, 0.8, 0.0);
            let a = var.phi(Phase::A).eval(&p).unwrap();
            let b = var.phi(Phase::B).eval(&p).unwrap();
            let want = if normal { [0.0, 0.6, 0.8] } else { [0.0; 3] };
            for i in 0..3 {
                assert!((a[i] - want[i]).abs() < 1e-14 && (b[i] - want[i]).abs() < 1e-14, "{a:?} {b:?}");
            }
        }
    }

    #[test]
    fn oversized_width_is_rejected() {
        let domain = ChartName::Sphere.domain(Slip::NoSlip);
        let seeds = VariationSeeds::random(&mut FieldRng::new(0));
        let err = make_admissible(&seeds, Slip::NoSlip, &domain, Some(2.5), 0.0).unwrap_err();
        assert!(matches!(err, VariationError::WidthTooLarge { .. }));
    }

    #[test]
    fn random_variations_are_admissible_and_close() {
        for (i, chart) in [ChartName::Sphere, ChartName::PerturbedSphere].into_iter().enumerate() {
            for slip in [Slip::NoSlip, Slip::Slip] {
                let sys = fixtures::random_state(&mut FieldRng::new(40 + i as u64), chart, slip);
                let rows = variation_suite(&sys, 1, 9, &QuadratureRule::new(24), 0.0).unwrap();
                for row in rows {
                    assert!(row.gap.relative() <= 1e-6, "{chart:?} {slip:?} {row:?}");
                }
            }
        }
    }
}
