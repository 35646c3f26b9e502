//! Spherical bubble: uniform expansion of the inner gas and the surface
//! film, reduced to ODEs for the radius, radial speed and densities.
//!
//! The outer phase is replaced by a constant ambient pressure. Under the
//! ansatz `v_A = (U/R) x`, `v_S = U n` the surface momentum equation is
//! solved exactly; the bulk equation is not (it would need a pressure
//! gradient), and its residual is reported by [`consistency_check`].

use std::f64::consts::PI;
use std::io::{self, Write};

use thiserror::Error;

use crate::constitutive::{self, ConstitutiveError, Eos, Phase, PhaseMaterial, PhaseState};
use crate::expr::{Expr, Point, Tape, VectorField};
use crate::geometry::{DomainConfig, GeometryError, QuadratureRule, Slip, SurfaceChart, SurfaceKind};
use crate::numeric::gauss_legendre_on;
use crate::residuals::{self, Equation, ResidualError, SystemState};
use crate::verify_integral::{integrate_over, IntegralRegion};

#[derive(Debug, Error)]
pub enum BubbleError {
    #[error("{what} = {value} at t = {t}: the state left the admissible set")]
    Invariant { what: &'static str, value: f64, t: f64 },
    #[error("invalid setting: {0}")]
    Setting(String),
    #[error(transparent)]
    Constitutive(#[from] ConstitutiveError),
    #[error(transparent)]
    Residual(#[from] ResidualError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Material data of the reduced model.
#[derive(Clone, Debug)]
pub struct BubbleParams {
    pub mu_inner: f64,
    pub lambda_inner: f64,
    pub mu_surface: f64,
    pub lambda_surface: f64,
    /// Barotropic law `p_A(rho)` in `x1`.
    pub law_inner: Expr,
    /// Barotropic law `p_S(rho)` in `x1`.
    pub law_surface: Expr,
    pub ambient_pressure: f64,
}

impl BubbleParams {
    /// `Pi_A(rho) = rho p_A'(rho) - p_A(rho)`.
    pub fn inner_pressure(&self, rho: f64) -> Result<f64, BubbleError> {
        Ok(constitutive::barotropic_pressure(&self.law_inner, rho)?)
    }

    pub fn surface_pressure(&self, rho: f64) -> Result<f64, BubbleError> {
        Ok(constitutive::barotropic_pressure(&self.law_surface, rho)?)
    }

    /// Ambient pressure that makes `state` a Young-Laplace equilibrium:
    /// `pi_inf = Pi_A + 2 Pi_S / R`.
    pub fn equilibrium_ambient(&self, state: &BubbleState) -> Result<f64, BubbleError> {
        Ok(self.inner_pressure(state.rho_inner)? + 2.0 * self.surface_pressure(state.rho_surface)? / state.radius)
    }

    fn compile(&self) -> Laws<'_> {
        Laws {
            params: self,
            inner: Tape::compile(&[constitutive::barotropic_law_pressure(&self.law_inner)]),
            surface: Tape::compile(&[constitutive::barotropic_law_pressure(&self.law_surface)]),
        }
    }

    fn inner_visc(&self) -> f64 {
        self.mu_inner + 3.0 * self.lambda_inner
    }

    fn surface_visc(&self) -> f64 {
        self.mu_surface + 2.0 * self.lambda_surface
    }
}

struct Laws<'a> {
    params: &'a BubbleParams,
    inner: Tape,
    surface: Tape,
}

impl Laws<'_> {
    fn pressures(&self, s: &BubbleState) -> Result<(f64, f64), BubbleError> {
        let at = |tape: &Tape, rho: f64| -> Result<f64, BubbleError> {
            tape.eval_scalar(&Point::new(rho, 0.0, 0.0, 0.0))
                .map_err(|e| BubbleError::Constitutive(e.into()))
        };
        Ok((at(&self.inner, s.rho_inner)?, at(&self.surface, s.rho_surface)?))
    }

    fn rates(&self, s: &BubbleState) -> Result<(BubbleRates, PowerBudget), BubbleError> {
        s.check()?;
        let p = self.params;
        let (pi_a, pi_s) = self.pressures(s)?;
        let (r, u) = (s.radius, s.speed);
        let strain = u / r;
        let force = -(2.0 / r) * (p.surface_visc() * strain - pi_s) - p.ambient_pressure - p.inner_visc() * strain + pi_a;
        let rates = BubbleRates {
            radius: u,
            speed: force / s.rho_surface,
            rho_inner: -3.0 * strain * s.rho_inner,
            rho_surface: -2.0 * strain * s.rho_surface,
        };
        let u2 = u * u;
        let budget = PowerBudget {
            dissipation: 8.0 * PI * p.surface_visc() * u2 + 4.0 * PI * r * p.inner_visc() * u2,
            pressure_work: 4.0 * PI * r * r * u * pi_a + 8.0 * PI * r * u * pi_s - 4.0 * PI * r * r * u * p.ambient_pressure,
            inertia_forcing: 0.8 * PI * s.rho_inner * u * rates.speed * r.powi(3),
        };
        if !rates.speed.is_finite() {
            return Err(BubbleError::Invariant {
                what: "acceleration",
                value: rates.speed,
                t: s.t,
            });
        }
        Ok((rates, budget))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BubbleState {
    pub t: f64,
    pub radius: f64,
    pub speed: f64,
    pub rho_inner: f64,
    pub rho_surface: f64,
}

impl BubbleState {
    fn check(&self) -> Result<(), BubbleError> {
        for (what, value) in [
            ("radius", self.radius),
            ("inner density", self.rho_inner),
            ("surface density", self.rho_surface),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(BubbleError::Invariant { what, value, t: self.t });
            }
        }
        if !self.speed.is_finite() {
            return Err(BubbleError::Invariant {
                what: "speed",
                value: self.speed,
                t: self.t,
            });
        }
        Ok(())
    }

    pub fn inner_mass(&self) -> f64 {
        self.rho_inner * 4.0 * PI * self.radius.powi(3) / 3.0
    }

    pub fn surface_mass(&self) -> f64 {
        self.rho_surface * 4.0 * PI * self.radius.powi(2)
    }

    /// Kinetic energy of the inner gas and of the film.
    pub fn kinetic(&self) -> f64 {
        let u2 = self.speed * self.speed;
        0.4 * PI * self.rho_inner * u2 * self.radius.powi(3) + 2.0 * PI * self.rho_surface * self.radius.powi(2) * u2
    }
}

/// Time derivatives of the reduced state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BubbleRates {
    pub radius: f64,
    pub speed: f64,
    pub rho_inner: f64,
    pub rho_surface: f64,
}

/// `R' = U`, `rho_A' = -3 (U/R) rho_A`, `rho_S' = -2 (U/R) rho_S`, and the
/// normal surface momentum balance for `U'`.
pub fn reduced_rhs(params: &BubbleParams, state: &BubbleState) -> Result<BubbleRates, BubbleError> {
    Ok(params.compile().rates(state)?.0)
}

/// Power balance terms at a state: viscous dissipation, pressure work
/// (inner, film and ambient) and the power of the bulk inertia forcing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerBudget {
    pub dissipation: f64,
    pub pressure_work: f64,
    pub inertia_forcing: f64,
}

pub fn power_budget(params: &BubbleParams, state: &BubbleState) -> Result<PowerBudget, BubbleError> {
    Ok(params.compile().rates(state)?.1)
}

/// Angular frequency squared of small oscillations about an equilibrium,
/// along the manifold of fixed masses.
pub fn stiffness(params: &BubbleParams, eq: &BubbleState) -> Result<f64, BubbleError> {
    let accel = |r: f64| -> Result<f64, BubbleError> {
        let s = BubbleState {
            t: eq.t,
            radius: r,
            speed: 0.0,
            rho_inner: eq.rho_inner * (eq.radius / r).powi(3),
            rho_surface: eq.rho_surface * (eq.radius / r).powi(2),
        };
        Ok(reduced_rhs(params, &s)?.speed)
    };
    let h = 1e-4 * eq.radius;
    let d = (8.0 * (accel(eq.radius + h)? - accel(eq.radius - h)?) - (accel(eq.radius + 2.0 * h)? - accel(eq.radius - 2.0 * h)?))
        / (12.0 * h);
    Ok(-d)
}

/// Oscillation period about an equilibrium; `None` when it is not stable.
pub fn characteristic_period(params: &BubbleParams, eq: &BubbleState) -> Result<Option<f64>, BubbleError> {
    let k = stiffness(params, eq)?;
    Ok((k > 0.0).then(|| 2.0 * PI / k.sqrt()))
}

/// One row of the trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub state: BubbleState,
    pub kinetic: f64,
    /// Time integral of the dissipation rate.
    pub dissipated: f64,
    /// Time integral of pressure work plus bulk inertia forcing.
    pub work: f64,
    /// `|K - K(0) + dissipated - work|`, relative to the largest term.
    pub energy_gap: f64,
}

#[derive(Debug)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    /// Set when the run stopped early.
    pub halted: Option<BubbleError>,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory holds the initial state")
    }

    /// Largest relative drift of `rho_A R^3` and `rho_S R^2`.
    pub fn mass_drift(&self) -> (f64, f64) {
        let s0 = self.samples[0].state;
        let (a0, s0m) = (s0.inner_mass(), s0.surface_mass());
        self.samples.iter().fold((0.0_f64, 0.0_f64), |(da, ds), s| {
            (
                da.max((s.state.inner_mass() - a0).abs() / a0),
                ds.max((s.state.surface_mass() - s0m).abs() / s0m),
            )
        })
    }

    pub fn max_energy_gap(&self) -> f64 {
        self.samples.iter().map(|s| s.energy_gap).fold(0.0, f64::max)
    }
}

/// Integration variables: `ln R, U, ln rho_A, ln rho_S` plus the two
/// accumulated energies. In these variables the mass invariants are linear,
/// so Runge-Kutta keeps them to rounding.
#[derive(Clone, Copy)]
struct Vars([f64; 6]);

impl Vars {
    fn from_state(s: &BubbleState) -> Self {
        Vars([s.radius.ln(), s.speed, s.rho_inner.ln(), s.rho_surface.ln(), 0.0, 0.0])
    }

    fn state(&self, t: f64) -> BubbleState {
        BubbleState {
            t,
            radius: self.0[0].exp(),
            speed: self.0[1],
            rho_inner: self.0[2].exp(),
            rho_surface: self.0[3].exp(),
        }
    }

    fn axpy(&self, h: f64, d: &Vars) -> Vars {
        let mut out = self.0;
        for (o, di) in out.iter_mut().zip(&d.0) {
            *o += h * di;
        }
        Vars(out)
    }
}

fn derivative(laws: &Laws, v: &Vars, t: f64) -> Result<Vars, BubbleError> {
    let s = v.state(t);
    let (rates, p) = laws.rates(&s)?;
    Ok(Vars([
        rates.radius / s.radius,
        rates.speed,
        rates.rho_inner / s.rho_inner,
        rates.rho_surface / s.rho_surface,
        p.dissipation,
        p.pressure_work + p.inertia_forcing,
    ]))
}

fn sample(v: &Vars, t: f64, k0: f64) -> Sample {
    let state = v.state(t);
    let kinetic = state.kinetic();
    let (dissipated, work) = (v.0[4], v.0[5]);
    let scale = [k0, kinetic, dissipated, work].iter().map(|x| x.abs()).fold(f64::MIN_POSITIVE, f64::max);
    Sample {
        state,
        kinetic,
        dissipated,
        work,
        energy_gap: (kinetic - k0 + dissipated - work).abs() / scale,
    }
}

/// Classical fourth-order Runge-Kutta with fixed step. Stops at the first
/// state outside the admissible set and returns what it has.
pub fn integrate(params: &BubbleParams, initial: &BubbleState, t_end: f64, dt: f64) -> Result<Trajectory, BubbleError> {
    if !(dt > 0.0) || !(t_end > initial.t) {
        return Err(BubbleError::Setting(format!("need dt > 0 and t_end > t0, got dt = {dt}, t_end = {t_end}")));
    }
    initial.check()?;
    let steps = ((t_end - initial.t) / dt).round().max(1.0) as usize;
    let laws = params.compile();
    let k0 = initial.kinetic();
    let mut v = Vars::from_state(initial);
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(sample(&v, initial.t, k0));
    for i in 0..steps {
        let t = initial.t + i as f64 * dt;
        let step = || -> Result<Vars, BubbleError> {
            let k1 = derivative(&laws, &v, t)?;
            let k2 = derivative(&laws, &v.axpy(0.5 * dt, &k1), t + 0.5 * dt)?;
            let k3 = derivative(&laws, &v.axpy(0.5 * dt, &k2), t + 0.5 * dt)?;
            let k4 = derivative(&laws, &v.axpy(dt, &k3), t + dt)?;
            let mut next = v.0;
            for (j, x) in next.iter_mut().enumerate() {
                *x += dt / 6.0 * (k1.0[j] + 2.0 * k2.0[j] + 2.0 * k3.0[j] + k4.0[j]);
            }
            let next = Vars(next);
            next.state(t + dt).check()?;
            Ok(next)
        };
        match step() {
            Ok(next) => {
                v = next;
                samples.push(sample(&v, initial.t + (i + 1) as f64 * dt, k0));
            }
            Err(e) => return Ok(Trajectory { samples, halted: Some(e) }),
        }
    }
    Ok(Trajectory { samples, halted: None })
}

/// Writes `t,R,U,rho_A,rho_S,mass_A,mass_S,kinetic,dissipated,work,gap_1_14`.
pub fn write_trajectory_csv<W: Write>(w: &mut W, traj: &Trajectory, every: usize) -> io::Result<()> {
    writeln!(w, "t,R,U,rho_A,rho_S,mass_A,mass_S,kinetic,dissipated,work,gap_1_14")?;
    let n = traj.samples.len();
    for (i, s) in traj.samples.iter().enumerate() {
        if i % every.max(1) != 0 && i + 1 != n {
            continue;
        }
        let st = &s.state;
        writeln!(
            w,
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            st.t,
            st.radius,
            st.speed,
            st.rho_inner,
            st.rho_surface,
            st.inner_mass(),
            st.surface_mass(),
            s.kinetic,
            s.dissipated,
            s.work,
            s.energy_gap
        )?;
    }
    Ok(())
}

/// Full three-dimensional fields of the ansatz around sample time `t_k`,
/// with `R(t) = R_k + U_k tau + a_k tau^2 / 2`, `U(t) = R'(t)`, and
/// densities carried by the mass invariants. The outer phase is an
/// inviscid fluid at the ambient pressure with the potential flow
/// `U R^2 x / |x|^3`.
pub fn reconstruct(params: &BubbleParams, s: &BubbleState) -> Result<SystemState, BubbleError> {
    let accel = reduced_rhs(params, s)?.speed;
    let tau = Expr::t() - s.t;
    let radius = s.radius + s.speed * &tau + 0.5 * accel * tau.square();
    let speed = s.speed + accel * &tau;
    let x = VectorField::position();
    let r2 = x.norm_sq();
    let r = r2.sqrt();
    let ratio = s.radius / &radius;
    let rho_a = s.rho_inner * ratio.powf(3.0);
    let rho_s = s.rho_surface * ratio.square();
    let chart = SurfaceChart::new(SurfaceKind::Sphere { radius: radius.clone() });
    let v_a = x.scale(&(&speed / &radius));
    let v_s = x.scale(&(&speed / &r));
    let v_b = x.scale(&(&speed * radius.square() / (&r2 * &r)));
    let mats = [
        PhaseMaterial::new(
            Phase::A,
            params.mu_inner,
            params.lambda_inner,
            0.0,
            Eos::Barotropic {
                law: params.law_inner.clone(),
            },
        )?,
        PhaseMaterial::inviscid(Phase::B),
        PhaseMaterial::new(
            Phase::S,
            params.mu_surface,
            params.lambda_surface,
            0.0,
            Eos::Barotropic {
                law: params.law_surface.clone(),
            },
        )?,
    ];
    let states = [
        PhaseState::new(rho_a, v_a, Expr::one()),
        PhaseState::new(Expr::one(), v_b, Expr::one()).with_pressure(Expr::constant(params.ambient_pressure)),
        PhaseState::new(rho_s, v_s, Expr::one()),
    ];
    Ok(SystemState::new(DomainConfig::new(10.0 * s.radius, chart, Slip::NoSlip), mats, states))
}

/// Audits of the reconstructed fields at one sample time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConsistencyRow {
    pub t: f64,
    /// Relative gap of the mass balance of the bubble (gas plus film).
    pub mass_gap: f64,
    /// Relative gap of the kinetic-energy balance of gas plus film with
    /// the ambient work.
    pub kinetic_gap: f64,
    /// Max-norm of the surface momentum residual at the nodes.
    pub surface_momentum: f64,
    /// Max-norm of the bulk momentum residual of the inner gas; nonzero
    /// whenever the bubble accelerates.
    pub bulk_momentum: f64,
}

fn bubble_integral(sys: &SystemState, rule: &QuadratureRule, inner: &[Expr], surface: &[Expr], t: f64) -> Result<Vec<f64>, BubbleError> {
    let a = integrate_over(&sys.domain, IntegralRegion::Inner, rule, inner, t)?;
    let s = integrate_over(&sys.domain, IntegralRegion::Surface, rule, surface, t)?;
    Ok(a.iter().zip(&s).map(|(x, y)| x + y).collect())
}

/// Runs the mass and kinetic-energy audits over `[t_k - half, t_k + half]`
/// and the momentum residuals at `t_k`.
pub fn consistency_at(params: &BubbleParams, s: &BubbleState, rule: &QuadratureRule, half: f64) -> Result<ConsistencyRow, BubbleError> {
    let sys = reconstruct(params, s)?;
    let (t1, t2) = (s.t - half, s.t + half);
    let (sa, ss) = (sys.state(Phase::A), sys.state(Phase::S));

    let stock = |st: &PhaseState| vec![st.rho.clone(), constitutive::kinetic_density(st)];
    let (m1, m2) = (
        bubble_integral(&sys, rule, &stock(sa), &stock(ss), t1)?,
        bubble_integral(&sys, rule, &stock(sa), &stock(ss), t2)?,
    );

    let power = |phase: Phase| -> Result<Vec<Expr>, BubbleError> {
        let m = sys.material(phase);
        let st = sys.state(phase);
        let frame = sys.frame(phase);
        let cont = residuals::continuity_field(&sys, phase);
        let mom = residuals::momentum_field(&sys, phase)?;
        let mut rate = constitutive::work_density(m, st, frame)? + mom.dot(&st.v) + st.v.norm_sq() * 0.5 * &cont
            - constitutive::dissipation_density(m, st, frame);
        if phase.is_surface() {
            let tb = constitutive::jump_traction(sys.material(Phase::B), sys.state(Phase::B), sys.chart(), Slip::NoSlip)?;
            rate = rate + tb.on_normal(sys.chart().normal_field()).dot(&st.v);
        }
        Ok(vec![cont, rate])
    };
    let (pa, ps) = (power(Phase::A)?, power(Phase::S)?);
    let (ts, ws) = gauss_legendre_on(8, t1, t2);
    let mut flux = [0.0; 2];
    for (&t, &w) in ts.iter().zip(&ws) {
        let v = bubble_integral(&sys, rule, &pa, &ps, t)?;
        flux[0] += w * v[0];
        flux[1] += w * v[1];
    }
    let rel = |lhs: f64, rhs: f64, scale: f64| (lhs - rhs).abs() / scale.max(lhs.abs()).max(rhs.abs()).max(f64::MIN_POSITIVE);

    let surface_momentum = residuals::residual_norms(&sys, Equation::Momentum, Phase::S, rule, s.t)?
        .map(|r| r.norm_inf)
        .unwrap_or(0.0);
    let bulk_momentum = residuals::residual_norms(&sys, Equation::Momentum, Phase::A, rule, s.t)?
        .map(|r| r.norm_inf)
        .unwrap_or(0.0);
    Ok(ConsistencyRow {
        t: s.t,
        mass_gap: rel(m2[0], m1[0] + flux[0], m1[0]),
        kinetic_gap: rel(m2[1], m1[1] + flux[1], m1[1].abs() + flux[1].abs()),
        surface_momentum,
        bulk_momentum,
    })
}

/// Consistency audits at every `stride`-th sample.
pub fn consistency_check(
    params: &BubbleParams,
    traj: &Trajectory,
    stride: usize,
    rule: &QuadratureRule,
) -> Result<Vec<ConsistencyRow>, BubbleError> {
    let dt = if traj.samples.len() > 1 {
        traj.samples[1].state.t - traj.samples[0].state.t
    } else {
        1e-3
    };
    traj.samples
        .iter()
        .step_by(stride.max(1))
        .map(|s| consistency_at(params, &s.state, rule, dt))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_with_vars;
    use crate::expr::Var;

    fn law(src: &str) -> Expr {
        parse_with_vars(src, &[("rho", Var::X1)]).unwrap()
    }

    fn params(viscous: bool) -> BubbleParams {
        let k = if viscous { 1.0 } else { 0.0 };
        BubbleParams {
            mu_inner: 0.02 * k,
            lambda_inner: 0.01 * k,
            mu_surface: 0.01 * k,
            lambda_surface: 0.005 * k,
            law_inner: law("2.5*rho^1.4"),
            law_surface: law("2*rho^0.5"),
            ambient_pressure: 0.0,
        }
    }

    fn start() -> BubbleState {
        BubbleState {
            t: 0.0,
            radius: 1.0,
            speed: 0.0,
            rho_inner: 1.2,
            rho_surface: 0.05,
        }
    }

    fn equilibrium(viscous: bool) -> (BubbleParams, BubbleState) {
        let mut p = params(viscous);
        let s = start();
        p.ambient_pressure = p.equilibrium_ambient(&s).unwrap();
        (p, s)
    }

    #[test]
    fn young_laplace_is_a_fixed_point() {
        let (p, s) = equilibrium(true);
        let r = reduced_rhs(&p, &s).unwrap();
        assert!(r.speed.abs() < 1e-14 && r.radius == 0.0);
    }

    #[test]
    fn inviscid_balanced_pressures_do_not_accelerate() {
        let mut p = params(false);
        p.law_surface = law("0*rho");
        for radius in [0.5, 1.0, 3.0] {
            let s = BubbleState { radius, ..start() };
            p.ambient_pressure = p.inner_pressure(s.rho_inner).unwrap();
            let r = reduced_rhs(&p, &BubbleState { speed: 0.3, ..s }).unwrap();
            assert!(r.speed.abs() < 1e-14);
        }
    }

    #[test]
    fn mass_invariants_from_rates() {
        let p = params(true);
        let s = BubbleState { speed: 0.7, ..start() };
        let r = reduced_rhs(&p, &s).unwrap();
        let da = r.rho_inner * s.radius.powi(3) + 3.0 * s.rho_inner * s.radius.powi(2) * r.radius;
        let ds = r.rho_surface * s.radius.powi(2) + 2.0 * s.rho_surface * s.radius * r.radius;
        assert!(da.abs() < 1e-15 && ds.abs() < 1e-15);
    }

    #[test]
    fn equilibrium_run_stays_put() {
        let (p, s) = equilibrium(true);
        let period = characteristic_period(&p, &s).unwrap().unwrap();
        let traj = integrate(&p, &s, 10.0 * period, period / 1000.0).unwrap();
        assert!(traj.halted.is_none());
        assert!((traj.last().state.radius - 1.0).abs() < 1e-10);
    }

    #[test]
    fn viscous_oscillation_decays() {
        let (p, s) = equilibrium(true);
        let period = characteristic_period(&p, &s).unwrap().unwrap();
        let kicked = BubbleState { speed: 0.05, ..s };
        let traj = integrate(&p, &kicked, 400.0 * period, period / 200.0).unwrap();
        assert!((traj.last().state.radius - 1.0).abs() < 1e-6, "{:?}", traj.last());
        let (da, ds) = traj.mass_drift();
        assert!(da < 1e-12 && ds < 1e-12);
        assert!(traj.max_energy_gap() < 1e-6, "{}", traj.max_energy_gap());
    }

    #[test]
    fn collapse_halts_without_nan() {
        let mut p = params(false);
        p.law_inner = law("0*rho");
        p.ambient_pressure = 50.0;
        let traj = integrate(&p, &start(), 10.0, 0.01).unwrap();
        assert!(traj.halted.is_some());
        assert!(traj.samples.iter().all(|s| s.state.radius > 0.0 && s.state.speed.is_finite()));
    }

    #[test]
    fn reconstructed_fields_solve_the_surface_equation() {
        let p = params(true);
        let s = BubbleState { speed: 0.4, ..start() };
        let row = consistency_at(&p, &s, &QuadratureRule::new(12), 1e-3).unwrap();
        assert!(row.surface_momentum < 1e-8, "{row:?}");
        assert!(row.bulk_momentum > 1e-3, "{row:?}");
        assert!(row.mass_gap < 1e-10 && row.kinetic_gap < 1e-8, "{row:?}");
    }

    #[test]
    fn slip_and_no_slip_tractions_agree_for_radial_flow() {
        let p = params(true);
        let sys = reconstruct(&p, &BubbleState { speed: 0.4, ..start() }).unwrap();
        let n = sys.chart().normal_field();
        let m = sys.material(Phase::A);
        let st = sys.state(Phase::A);
        let a = constitutive::jump_traction(m, st, sys.chart(), Slip::NoSlip).unwrap().on_normal(n);
        let b = constitutive::jump_traction(m, st, sys.chart(), Slip::Slip).unwrap().on_normal(n);
        let pt = crate::expr::Point::new(0.0, 0.6, 0.8, 0.0);
        let (a, b) = (a.eval(&pt).unwrap(), b.eval(&pt).unwrap());
        for i in 0..3 {
            assert!((a[i] - b[i]).abs() < 1e-14);
        }
    }
}
