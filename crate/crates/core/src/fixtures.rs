//! Manufactured states and seeded random smooth fields.
//!
//! Every generator draws from a ChaCha8 stream keyed by a single `u64`
//! seed, so a seed reproduces the same fields on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constitutive::{Eos, Phase, PhaseMaterial, PhaseState};
use crate::expr::{parse, sum, Expr, VectorField};
use crate::geometry::{DomainConfig, Slip, SurfaceChart, SurfaceKind};
use crate::residuals::SystemState;

/// Named test surfaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChartName {
    Sphere,
    Ellipsoid,
    PerturbedSphere,
}

impl ChartName {
    pub const ALL: [ChartName; 3] = [ChartName::Sphere, ChartName::Ellipsoid, ChartName::PerturbedSphere];

    pub fn name(self) -> &'static str {
        match self {
            ChartName::Sphere => "sphere",
            ChartName::Ellipsoid => "ellipsoid",
            ChartName::PerturbedSphere => "perturbed_sphere",
        }
    }

    /// Static surface with the given scale factor expression.
    pub fn kind(self, scale: Expr) -> SurfaceKind {
        match self {
            ChartName::Sphere => SurfaceKind::Sphere { radius: scale },
            ChartName::Ellipsoid => SurfaceKind::Ellipsoid {
                axes: [1.0, 1.0, 2.0],
                scale,
            },
            ChartName::PerturbedSphere => SurfaceKind::PerturbedSphere {
                base: scale,
                eps: 0.2,
                mode: SurfaceKind::p2_mode(),
            },
        }
    }

    pub fn chart(self) -> SurfaceChart {
        SurfaceChart::new(self.kind(Expr::one()))
    }

    /// Outer radius leaving a comfortable shell around the unit-scale chart.
    pub fn outer_radius(self) -> f64 {
        3.0
    }

    pub fn domain(self, slip: Slip) -> DomainConfig {
        DomainConfig::new(self.outer_radius(), self.chart(), slip)
    }
}

/// Seeded generator of smooth fields.
pub struct FieldRng {
    rng: ChaCha8Rng,
}

impl FieldRng {
    pub fn new(seed: u64) -> Self {
        FieldRng {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent stream for item `index` of a suite seeded by `seed`.
    pub fn for_item(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        FieldRng { rng }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.rng.random::<f64>()
    }

    pub fn pick<T: Copy>(&mut self, items: &[T]) -> T {
        items[self.rng.random_range(0..items.len())]
    }

    /// `c0 + linear + two trig modes`, amplitude roughly `amp`, time
    /// dependent when `with_time`.
    pub fn smooth_scalar(&mut self, amp: f64, with_time: bool) -> Expr {
        let x = VectorField::position();
        let mut terms = vec![Expr::constant(self.uniform(-amp, amp))];
        for i in 0..3 {
            terms.push(self.uniform(-amp, amp) * 0.5 * &x.c[i]);
        }
        for _ in 0..2 {
            let k: Vec<f64> = (0..3).map(|_| self.uniform(-1.2, 1.2)).collect();
            let phase = self.uniform(0.0, std::f64::consts::TAU);
            let freq = if with_time { self.uniform(-1.0, 1.0) } else { 0.0 };
            let arg = sum((0..3).map(|i| k[i] * &x.c[i])) + freq * Expr::t() + phase;
            terms.push(self.uniform(-amp, amp) * arg.sin());
        }
        sum(terms)
    }

    /// `base * (1 + 0.3 sin(...))`, strictly positive.
    pub fn positive_scalar(&mut self, base: f64, with_time: bool) -> Expr {
        let x = VectorField::position();
        let k: Vec<f64> = (0..3).map(|_| self.uniform(-1.0, 1.0)).collect();
        let phase = self.uniform(0.0, std::f64::consts::TAU);
        let freq = if with_time { self.uniform(-0.5, 0.5) } else { 0.0 };
        let arg = sum((0..3).map(|i| k[i] * &x.c[i])) + freq * Expr::t() + phase;
        base * (1.0 + self.uniform(0.05, 0.3) * arg.sin())
    }

    pub fn smooth_vector(&mut self, amp: f64, with_time: bool) -> VectorField {
        VectorField::new(
            self.smooth_scalar(amp, with_time),
            self.smooth_scalar(amp, with_time),
            self.smooth_scalar(amp, with_time),
        )
    }

    pub fn material(&mut self, phase: Phase, eos: Eos) -> PhaseMaterial {
        PhaseMaterial::new(phase, self.uniform(0.1, 2.0), self.uniform(0.0, 1.5), self.uniform(0.1, 2.0), eos)
            .expect("nonnegative parameters")
    }

    pub fn ideal_gas(&mut self) -> Eos {
        Eos::IdealGas {
            cv: self.uniform(0.5, 3.0),
            r_gas: self.uniform(0.2, 1.0),
        }
    }
}

/// `R(w) evaluated at x/|x|` as an ambient expression.
pub fn profile_extension(chart: &SurfaceChart) -> Expr {
    VectorField::position().norm_sq().sqrt() - chart.level_set()
}

/// Radial remap `x -> sigma(r) x / r` with `sigma(R) = R` on the surface and
/// `sigma'(R_outer) = 0`, so composed fields keep their surface values and
/// get a zero normal derivative on the outer sphere.
pub fn neumann_remap(f: &Expr, chart: &SurfaceChart, outer: f64) -> Expr {
    let r = VectorField::position().norm_sq().sqrt();
    let rs = profile_extension(chart);
    let sigma = &r - (&r - &rs).square() / (2.0 * (outer - &rs));
    let factor = sigma / &r;
    let x = VectorField::position();
    f.substitute(&[
        Some(&x.c[0] * &factor),
        Some(&x.c[1] * &factor),
        Some(&x.c[2] * &factor),
        None,
    ])
}

/// Homothetic expansion with rotation about `e3`: the flow
/// `x = (1 + a t) Rot(w t) X`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpansionFlow {
    pub rate: f64,
    pub spin: f64,
}

impl ExpansionFlow {
    /// `1 + a t`.
    pub fn scale(&self) -> Expr {
        1.0 + self.rate * Expr::t()
    }

    pub fn velocity(&self) -> VectorField {
        let x = VectorField::position();
        let radial = x.scale(&(self.rate / self.scale()));
        let spin = VectorField::new(-self.spin * &x.c[1], self.spin * &x.c[0], Expr::zero());
        radial.add(&spin)
    }

    /// Lagrangian label `X(x, t)`.
    pub fn label(&self) -> VectorField {
        let x = VectorField::position();
        let angle = self.spin * Expr::t();
        let (c, s) = (angle.cos(), angle.sin());
        let inv = self.scale().recip();
        VectorField::new(
            (&c * &x.c[0] + &s * &x.c[1]) * &inv,
            (-&s * &x.c[0] + &c * &x.c[1]) * &inv,
            &x.c[2] * &inv,
        )
    }

    /// Transports a label function: `f(X(x, t)) / (1 + a t)^dim`. Solves
    /// continuity in `dim` dimensions.
    pub fn transported_density(&self, f: &Expr, dim: i32) -> Expr {
        let label = self.label();
        let g = f.substitute(&[Some(label.c[0].clone()), Some(label.c[1].clone()), Some(label.c[2].clone()), None]);
        g * self.scale().powf(-(dim as f64))
    }
}

/// Parameters of the expanding-bubble conservation fixture.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConservationFixture {
    pub slip: Slip,
    pub radius: f64,
    pub rate: f64,
    pub spin: f64,
    pub outer: f64,
}

impl ConservationFixture {
    /// Radial expansion, plus rigid spin inside when the surface slips.
    pub fn new(slip: Slip) -> Self {
        ConservationFixture {
            slip,
            radius: 1.0,
            rate: 0.2,
            spin: if slip == Slip::Slip { 0.3 } else { 0.0 },
            outer: 3.0,
        }
    }

    pub fn system(&self) -> SystemState {
        let flow = ExpansionFlow {
            rate: self.rate,
            spin: self.spin,
        };
        let big_r = self.radius * flow.scale();
        let r_dot = self.radius * self.rate;
        let chart = SurfaceChart::new(SurfaceKind::Sphere { radius: big_r.clone() });
        let x = VectorField::position();
        let r2 = x.norm_sq();
        let r = r2.sqrt();

        let label_density = parse("1 + 0.3*x1 + 0.2*x3^2").expect("static expression");
        let rho_a = flow.transported_density(&label_density, 3);
        let rho_s = flow.transported_density(&label_density, 2);

        let gap = self.outer - &big_r;
        let radial_b = x.scale(&(r_dot * (self.outer - &r) / (&gap * &r)));
        let spin_b = (self.outer * self.outer - &r2) / (self.outer * self.outer - big_r.square()) * self.spin;
        let swirl_b = VectorField::new(-(&spin_b * &x.c[1]), &spin_b * &x.c[0], Expr::zero());
        let v_b = radial_b.add(&swirl_b);
        let rho_b = 2.0 / (&r2 * &gap);

        let theta = 1.0 + 0.05 * (&r2 - self.outer * self.outer).square();
        let v = flow.velocity();
        let p = |s: &str| parse(s).expect("static expression");
        let a = PhaseState::new(rho_a, v.clone(), theta.clone())
            .with_pressure(p("2 + 0.1*x3"))
            .with_energy(p("1 + 0.1*x1^2 + 0.05*t"));
        let b = PhaseState::new(rho_b, v_b, theta.clone())
            .with_pressure(p("1 + 0.05*(x1^2 + x2^2 + x3^2)"))
            .with_energy(p("1.5 + 0.1*x2"));
        let s = PhaseState::new(rho_s, v, theta)
            .with_pressure(p("-0.5 + 0.1*x1"))
            .with_energy(p("0.5 + 0.1*x3"));
        let mats = [
            PhaseMaterial::new(Phase::A, 0.7, 0.3, 0.5, Eos::Explicit),
            PhaseMaterial::new(Phase::B, 0.4, 0.2, 0.8, Eos::Explicit),
            PhaseMaterial::new(Phase::S, 0.2, 0.1, 0.3, Eos::Explicit),
        ]
        .map(|m| m.expect("valid parameters"));
        SystemState::new(DomainConfig::new(self.outer, chart, self.slip), mats, [a, b, s])
    }
}

/// Uniform expansion `rho = (1+t)^-3`, `v = x/(1+t)` with barotropic law
/// `p = rho^2` and the internal energy that solves the energy equation.
/// The surface expands with it (`R = 1 + t`, `v_S = n`) and carries
/// `rho_S = (1+t)^-2` with law `p_S = rho^2`.
pub fn first_law_expanding(mu: [f64; 2], lambda: [f64; 2]) -> SystemState {
    let s = 1.0 + Expr::t();
    let chart = SurfaceChart::new(SurfaceKind::Sphere { radius: s.clone() });
    let law = Eos::barotropic("rho^2").expect("static law");
    let bulk_e = (3.0 * mu[0] + 9.0 * lambda[0]) / 2.0 * s.square() + s.powf(-3.0);
    let surf_e = (2.0 * mu[1] + 4.0 * lambda[1]) * Expr::t() + s.powf(-2.0);
    let a = PhaseState::new(s.powf(-3.0), VectorField::position().scale(&s.recip()), Expr::one()).with_energy(bulk_e);
    let v_s = chart.normal_field().clone();
    let surf = PhaseState::new(s.powf(-2.0), v_s, Expr::one()).with_energy(surf_e);
    let b = PhaseState::at_rest(1.0, 1.0).with_pressure(Expr::zero()).with_energy(Expr::zero());
    let mats = [
        PhaseMaterial::new(Phase::A, mu[0], lambda[0], 0.0, law.clone()),
        PhaseMaterial::new(Phase::B, 0.0, 0.0, 0.0, Eos::Explicit),
        PhaseMaterial::new(Phase::S, mu[1], lambda[1], 0.0, law),
    ]
    .map(|m| m.expect("valid parameters"));
    SystemState::new(DomainConfig::new(4.0, chart, Slip::NoSlip), mats, [a, b, surf])
}

/// Static shell conducting heat: `theta_B = |x|^2 + 6 kappa t / rho`,
/// `e_B = theta_B`, law `p = rho^2`.
pub fn first_law_conducting_shell(kappa: f64) -> SystemState {
    let rho = 1.5;
    let theta = parse("x1^2 + x2^2 + x3^2").expect("static expression") + 6.0 * kappa / rho * Expr::t();
    let b = PhaseState::new(Expr::constant(rho), VectorField::zero(), theta.clone()).with_energy(theta);
    let mats = [
        PhaseMaterial::inviscid(Phase::A),
        PhaseMaterial::new(Phase::B, 0.5, 0.5, kappa, Eos::barotropic("rho^2").expect("static law"))
            .expect("valid parameters"),
        PhaseMaterial::inviscid(Phase::S),
    ];
    let rest = PhaseState::at_rest(1.0, 1.0).with_pressure(Expr::zero()).with_energy(Expr::zero());
    SystemState::new(
        DomainConfig::new(3.0, SurfaceChart::sphere(1.0), Slip::NoSlip),
        mats,
        [rest.clone(), b, rest],
    )
}

/// Ideal-gas fixture solving continuity and the energy equation exactly:
/// uniform expansion with `theta_A = alpha(t) + beta(t) |x|^2` in the bulk
/// and `theta_S = alpha_S(t)` on the expanding unit sphere. The heat drawn
/// from the bulk, `q_A . n`, is folded into `alpha_S`.
pub fn ideal_gas_expanding() -> SystemState {
    let (cv, r_gas) = (1.5, 0.6);
    let (mu, lambda, kappa) = (0.4, 0.2, 0.3);
    let (mu_s, lambda_s) = (0.3, 0.1);
    let rho0 = 2.0;
    let beta0 = 0.2;
    let c0 = 1.0;
    let s = 1.0 + Expr::t();
    let k = 3.0 * r_gas / cv;
    let visc = 3.0 * mu + 9.0 * lambda;
    let beta = beta0 * s.powf(-(2.0 + k));
    let alpha = (3.0 * kappa * beta0 * s.powf(2.0 - k) + visc / (k + 2.0) * s.square()) / (rho0 * cv) + c0 * s.powf(-k);
    let r2 = VectorField::position().norm_sq();
    let theta_a = alpha + &beta * r2;

    // rho_S cv alpha_S' + (2/s) r_gas rho_S alpha_S = e_D - q_A . n
    // with rho_S = rho0_S s^-2, e_D = (2 mu + 4 lambda)/s^2, q_A . n = 2 kappa beta s.
    let rho0_s = 1.0;
    let ks = 2.0 * r_gas / cv;
    let visc_s = 2.0 * mu_s + 4.0 * lambda_s;
    let alpha_s = (visc_s / (ks + 1.0) * s.clone()
        - 2.0 * kappa * beta0 / (ks + 2.0 - k) * s.powf(2.0 - k))
        / (rho0_s * cv)
        + c0 * s.powf(-ks);

    let chart = SurfaceChart::new(SurfaceKind::Sphere { radius: s.clone() });
    let v = VectorField::position().scale(&s.recip());
    let a = PhaseState::new(rho0 * s.powf(-3.0), v.clone(), theta_a);
    let surf = PhaseState::new(rho0_s * s.powf(-2.0), v, alpha_s);
    let b = PhaseState::at_rest(1.0, 1.0);
    let gas = Eos::IdealGas { cv, r_gas };
    let mats = [
        PhaseMaterial::new(Phase::A, mu, lambda, kappa, gas.clone()),
        PhaseMaterial::new(Phase::B, 0.0, 0.0, 0.0, gas.clone()),
        PhaseMaterial::new(Phase::S, mu_s, lambda_s, 0.0, gas),
    ]
    .map(|m| m.expect("valid parameters"));
    SystemState::new(DomainConfig::new(4.0, chart, Slip::NoSlip), mats, [a, b, surf])
}

/// Random state whose densities solve continuity exactly: every phase is
/// carried by an expansion-with-spin flow, the surface is an axisymmetric
/// chart scaled by `1 + a t`. Temperature, pressure, energy are arbitrary.
pub fn random_transported_state(rng: &mut FieldRng, chart: ChartName, slip: Slip, eos: Eos) -> SystemState {
    random_transported_state_with(rng, |s| chart.kind(s), chart.outer_radius(), slip, eos)
}

/// As [`random_transported_state`] for any surface family `shape(scale)`.
/// The spin keeps the surface in place only when the family is
/// axisymmetric about `e3`.
pub fn random_transported_state_with(
    rng: &mut FieldRng,
    shape: impl Fn(Expr) -> SurfaceKind,
    outer: f64,
    slip: Slip,
    eos: Eos,
) -> SystemState {
    let flow = ExpansionFlow {
        rate: rng.uniform(-0.2, 0.3),
        spin: rng.uniform(-0.5, 0.5),
    };
    let surface = SurfaceChart::new(shape(flow.scale()));
    let v = flow.velocity();
    let explicit = matches!(eos, Eos::Explicit);
    let mut phase_state = |dim: i32| {
        let f = rng.positive_scalar(1.0, false);
        let mut st = PhaseState::new(flow.transported_density(&f, dim), v.clone(), rng.positive_scalar(1.5, true));
        if explicit {
            st = st
                .with_pressure(rng.smooth_scalar(1.0, true))
                .with_energy(rng.smooth_scalar(1.0, true));
        }
        st
    };
    let a = phase_state(3);
    let b = phase_state(3);
    let s = phase_state(2);
    let mats = [
        rng.material(Phase::A, eos.clone()),
        rng.material(Phase::B, eos.clone()),
        rng.material(Phase::S, eos),
    ];
    SystemState::new(DomainConfig::new(outer, surface, slip), mats, [a, b, s])
}

/// Random static-geometry state with arbitrary smooth fields. `theta_B`
/// satisfies the outer Neumann condition and all temperatures agree on the
/// surface.
pub fn random_state(rng: &mut FieldRng, chart: ChartName, slip: Slip) -> SystemState {
    random_state_in(rng, chart.domain(slip))
}

pub fn random_state_in(rng: &mut FieldRng, domain: DomainConfig) -> SystemState {
    let theta_common = rng.positive_scalar(2.0, false);
    let level = domain.surface.level_set().clone();
    let theta_a = &theta_common + &level * rng.smooth_scalar(0.2, false);
    let theta_b_seed = &theta_common + &level * rng.smooth_scalar(0.2, false);
    let theta_b = neumann_remap(&theta_b_seed, &domain.surface, domain.outer_radius);
    let st = |theta: Expr, rng: &mut FieldRng| {
        PhaseState::new(rng.positive_scalar(1.0, false), rng.smooth_vector(0.5, false), theta)
            .with_pressure(rng.smooth_scalar(1.0, false))
            .with_energy(rng.smooth_scalar(1.0, false))
    };
    let a = st(theta_a, rng);
    let b = st(theta_b, rng);
    let s = st(theta_common, rng);
    let mats = [
        rng.material(Phase::A, Eos::Explicit),
        rng.material(Phase::B, Eos::Explicit),
        rng.material(Phase::S, Eos::Explicit),
    ];
    SystemState::new(domain, mats, [a, b, s])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{Point, Var};
    use crate::geometry::QuadratureRule;
    use crate::residuals::{self, Equation};

    #[test]
    fn seeds_reproduce() {
        let a = FieldRng::new(7).smooth_scalar(1.0, true);
        let b = FieldRng::new(7).smooth_scalar(1.0, true);
        let p = Point::new(0.3, -0.2, 0.5, 0.1);
        assert_eq!(a.eval(&p).unwrap(), b.eval(&p).unwrap());
        let c = FieldRng::for_item(7, 1).smooth_scalar(1.0, true);
        assert_ne!(a.eval(&p).unwrap(), c.eval(&p).unwrap());
    }

    #[test]
    fn remap_keeps_surface_values_and_flattens_outer_derivative() {
        let chart = ChartName::Ellipsoid.chart();
        let f = parse("x1 + x2*x3 + sin(x3)").unwrap();
        let g = neumann_remap(&f, &chart, 3.0);
        let xs = chart.position(0.7, 1.1, 0.0).unwrap();
        let p = Point::at(xs, 0.0);
        assert!((g.eval(&p).unwrap() - f.eval(&p).unwrap()).abs() < 1e-14);
        let x = [3.0 * 0.6, 3.0 * 0.0, 3.0 * 0.8];
        let grad: Vec<f64> = Var::SPACE.iter().map(|&v| g.derivative(v).eval(&Point::at(x, 0.0)).unwrap()).collect();
        let radial = grad[0] * 0.6 + grad[2] * 0.8;
        assert!(radial.abs() < 1e-13);
    }

    #[test]
    fn transported_states_solve_continuity() {
        let rule = QuadratureRule::new(6);
        for (i, chart) in ChartName::ALL.into_iter().enumerate() {
            let mut rng = FieldRng::new(i as u64);
            let sys = random_transported_state(&mut rng, chart, Slip::Slip, Eos::Explicit);
            for phase in Phase::ALL {
                let rep = residuals::residual_norms(&sys, Equation::Continuity, phase, &rule, 0.4).unwrap().unwrap();
                assert!(rep.norm_inf < 1e-12, "{chart:?} {phase} {rep:?}");
            }
        }
    }

    #[test]
    fn conservation_fixture_satisfies_coupling() {
        let rule = QuadratureRule::new(8);
        for slip in [Slip::NoSlip, Slip::Slip] {
            let sys = ConservationFixture::new(slip).system();
            for t in [0.0, 0.3] {
                let rep = residuals::boundary_residual(&sys, &rule, t).unwrap();
                assert!(rep.max() < 1e-12, "{slip:?} {rep:?}");
                for phase in Phase::ALL {
                    let c = residuals::residual_norms(&sys, Equation::Continuity, phase, &rule, t).unwrap().unwrap();
                    assert!(c.norm_inf < 1e-12, "{phase} {c:?}");
                }
            }
        }
    }

    #[test]
    fn first_law_fixture_solves_energy_equation() {
        let sys = first_law_expanding([0.5, 0.3], [0.2, 0.4]);
        let rule = QuadratureRule::new(6);
        for phase in [Phase::A, Phase::S] {
            let r = residuals::residual_norms(&sys, Equation::Energy, phase, &rule, 0.3).unwrap().unwrap();
            assert!(r.norm_inf < 1e-12, "{phase} {r:?}");
        }
        let sys = first_law_conducting_shell(0.7);
        let r = residuals::residual_norms(&sys, Equation::Energy, Phase::B, &rule, 0.3).unwrap().unwrap();
        assert!(r.norm_inf < 1e-12, "{r:?}");
    }

    #[test]
    fn ideal_gas_fixture_solves_energy_equation() {
        let sys = ideal_gas_expanding();
        let rule = QuadratureRule::new(6);
        for phase in [Phase::A, Phase::S] {
            for eq in [Equation::Continuity, Equation::Energy] {
                let r = residuals::residual_norms(&sys, eq, phase, &rule, 0.3).unwrap().unwrap();
                assert!(r.norm_inf < 1e-12, "{phase} {eq} {r:?}");
            }
        }
    }
}
