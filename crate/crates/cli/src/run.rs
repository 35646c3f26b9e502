//! Scenario execution. Every scenario yields check tallies plus the CSV
//! reports of the modules it exercised.

use std::fmt::Display;

use bulksurf::bubble::{self, Trajectory};
use bulksurf::constitutive::{Eos, Phase};
use bulksurf::expr::{Expr, VectorField};
use bulksurf::fixtures::{self, ExpansionFlow, FieldRng};
use bulksurf::geometry::{self, DomainConfig, QuadratureRule, SurfaceChart};
use bulksurf::residuals::{self, Equation, SystemState};
use bulksurf::thermo::{self, PotentialEquation};
use bulksurf::variation;
use bulksurf::verify_integral::{ibp_check, ibp_corpus, transport_check, IbpKind, IntegralRegion};
use thiserror::Error;

use crate::config::{BubbleJob, Job, Kind, Scenario};

/// Pass/fail counts of one named check.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckRow {
    pub check: String,
    pub pass: usize,
    pub fail: usize,
    pub max_gap: f64,
}

#[derive(Debug, Error)]
#[error("scenario `{scenario}`, check `{check}`: {message}")]
pub struct RunError {
    pub scenario: String,
    pub check: String,
    pub message: String,
}

trait During<T> {
    fn during(self, sc: &Scenario, check: &str) -> Result<T, RunError>;
}

impl<T, E: Display> During<T> for Result<T, E> {
    fn during(self, sc: &Scenario, check: &str) -> Result<T, RunError> {
        self.map_err(|e| RunError {
            scenario: sc.name.clone(),
            check: check.to_string(),
            message: e.to_string(),
        })
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub scenario: String,
    pub kind: Kind,
    pub seed: u64,
    pub checks: Vec<CheckRow>,
    /// Report file name and body.
    pub files: Vec<(String, Vec<u8>)>,
    /// Lines for the terminal.
    pub notes: Vec<String>,
}

impl Outcome {
    fn new(sc: &Scenario) -> Self {
        Outcome {
            scenario: sc.name.clone(),
            kind: sc.kind,
            seed: sc.seed,
            checks: Vec::new(),
            files: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn failed(&self) -> usize {
        self.checks.iter().map(|c| c.fail).sum()
    }

    /// Tallies one comparison; NaN gaps fail.
    pub fn record(&mut self, check: &str, gap: f64, tol: f64) -> bool {
        let ok = gap <= tol;
        let row = match self.checks.iter_mut().find(|c| c.check == check) {
            Some(row) => row,
            None => {
                self.checks.push(CheckRow {
                    check: check.to_string(),
                    pass: 0,
                    fail: 0,
                    max_gap: 0.0,
                });
                self.checks.last_mut().expect("just pushed")
            }
        };
        if ok {
            row.pass += 1;
        } else {
            row.fail += 1;
        }
        if gap.is_nan() || gap > row.max_gap {
            row.max_gap = gap;
        }
        ok
    }

    fn file(&mut self, name: &str, body: Vec<u8>) {
        self.files.push((name.to_string(), body));
    }

    /// The outcome of a scenario that stopped on an error.
    pub fn from_error(sc: &Scenario, err: &RunError) -> Self {
        let mut out = Outcome::new(sc);
        out.checks.push(CheckRow {
            check: err.check.clone(),
            pass: 0,
            fail: 1,
            max_gap: f64::NAN,
        });
        out.notes.push(format!("error: {err}"));
        out
    }
}

pub fn run(sc: &Scenario) -> Result<Outcome, RunError> {
    let mut out = Outcome::new(sc);
    match &sc.job {
        Job::Geometry => geometry_checks(sc, &mut out)?,
        Job::Ibp { cases } => ibp(sc, cases.clone().unwrap_or_else(ibp_corpus), &mut out)?,
        Job::Transport { f, flow, step } => transport(sc, f, flow, *step, &mut out)?,
        Job::Residuals { state } => residual_checks(sc, state.as_deref(), &mut out)?,
        Job::Variation { state } => variation_checks(sc, state.as_deref(), &mut out)?,
        Job::Thermo { state } => thermo_checks(sc, state.as_deref(), &mut out)?,
        Job::Bubble(job) => bubble_run(sc, job, &mut out)?,
    }
    Ok(out)
}

fn csv<F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>>(f: F) -> Vec<u8> {
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to memory");
    buf
}

fn geometry_checks(sc: &Scenario, out: &mut Outcome) -> Result<(), RunError> {
    let dom = sc.domain();
    let rule = QuadratureRule::new(sc.rule.n);
    let contained = match dom.check_contained(&rule, &[sc.t]) {
        Ok(()) => 0.0,
        Err(e) => {
            out.notes.push(format!("containment: {e}"));
            f64::INFINITY
        }
    };
    let g = geometry::geometry_identities(&dom.surface, &rule, sc.t).during(sc, "geometry_identities")?;
    let mut rows: Vec<(&str, f64, f64)> = vec![
        ("containment", contained, 0.0),
        ("projection_idempotence", g.idempotence, sc.tol("pointwise")),
        ("projection_annihilates_normal", g.annihilates_normal, sc.tol("pointwise")),
        ("unit_normal", g.unit_normal, sc.tol("pointwise")),
        ("curvature_flux", g.curvature_flux, sc.tol("flux")),
    ];
    if let Some(r) = sc.shape.fixed_sphere_radius() {
        let dev = (g.curvature_min + 2.0 / r).abs().max((g.curvature_max + 2.0 / r).abs());
        rows.push(("sphere_mean_curvature", dev, sc.tol("curvature")));
    }
    out.notes.push(format!("mean curvature range [{:.6}, {:.6}]", g.curvature_min, g.curvature_max));
    let mut body = b"identity,value,tol,pass\n".to_vec();
    for (name, value, tol) in rows {
        let ok = out.record(name, value, tol);
        body.extend(format!("{name},{value:e},{tol:e},{ok}\n").bytes());
    }
    out.file("geometry.csv", body);
    Ok(())
}

fn ibp(sc: &Scenario, cases: Vec<(Expr, Expr, usize)>, out: &mut Outcome) -> Result<(), RunError> {
    let dom = sc.domain();
    let tol = sc.tol("gap");
    let mut body = b"formula,case,j,lhs,rhs,gap,tol,pass\n".to_vec();
    for (i, (f, g, j)) in cases.iter().enumerate() {
        for kind in IbpKind::ALL {
            let check = format!("ibp_{kind}");
            let gap = ibp_check(kind, &dom, f, g, *j, &sc.rule, sc.t).during(sc, &check)?;
            let ok = out.record(&check, gap.gap, tol);
            body.extend(format!("{kind},{i},{},{:e},{:e},{:e},{tol:e},{ok}\n", j + 1, gap.lhs, gap.rhs, gap.gap).bytes());
        }
    }
    out.file("ibp.csv", body);
    Ok(())
}

/// Expansion velocity blended to rest on the outer sphere, plus the spin.
fn shell_velocity(flow: &ExpansionFlow, outer: f64) -> VectorField {
    let x = VectorField::position();
    let r = x.norm_sq().sqrt();
    let radial = x.scale(&(flow.rate * (outer - &r) / ((outer - flow.scale()) * &r)));
    let spin = VectorField::new(-flow.spin * &x.c[1], flow.spin * &x.c[0], Expr::zero());
    radial.add(&spin)
}

fn transport(sc: &Scenario, f: &Expr, flow: &ExpansionFlow, step: f64, out: &mut Outcome) -> Result<(), RunError> {
    let chart = SurfaceChart::new(sc.shape.kind(flow.scale()));
    let dom = DomainConfig::new(sc.outer, chart, sc.slip);
    let tol = sc.tol("gap");
    let cases = [
        ("inner", IntegralRegion::Inner, flow.velocity()),
        ("shell", IntegralRegion::Shell, shell_velocity(flow, sc.outer)),
        ("surface", IntegralRegion::Surface, flow.velocity()),
    ];
    let mut body = b"region,t,h,lhs,rhs,gap,motion_mismatch,tol,pass\n".to_vec();
    for (name, region, v) in cases {
        let check = format!("transport_{name}");
        let rep = transport_check(&dom, region, f, &v, &sc.rule, sc.t, step).during(sc, &check)?;
        let ok = out.record(&check, rep.gap.gap, tol);
        body.extend(
            format!(
                "{name},{},{step},{:e},{:e},{:e},{:e},{tol:e},{ok}\n",
                sc.t, rep.gap.lhs, rep.gap.rhs, rep.gap.gap, rep.motion_mismatch
            )
            .bytes(),
        );
    }
    out.file("transport.csv", body);
    Ok(())
}

fn random_state(sc: &Scenario, item: u64) -> SystemState {
    fixtures::random_state_in(&mut FieldRng::for_item(sc.seed, item), sc.domain())
}

fn transported_state(sc: &Scenario, item: u64, ideal_gas: bool) -> SystemState {
    let mut rng = FieldRng::for_item(sc.seed, item);
    let eos = if ideal_gas { rng.ideal_gas() } else { Eos::Explicit };
    fixtures::random_transported_state_with(&mut rng, |s| sc.shape.kind(s), sc.outer, sc.slip, eos)
}

fn identity_rows(sc: &Scenario, sys: &SystemState, id: usize, out: &mut Outcome, body: &mut Vec<u8>) -> Result<(), RunError> {
    let tol = sc.tol("identity");
    for (name, gap) in residuals::algebraic_identities(sys, &sc.rule, sc.t).during(sc, "algebraic_identities")? {
        let ok = out.record(name, gap, tol);
        body.extend(format!("{name},{id},{gap:e},{tol:e},{ok}\n").bytes());
    }
    Ok(())
}

fn form_rows(sc: &Scenario, sys: &SystemState, out: &mut Outcome) -> Result<(), RunError> {
    for phase in Phase::ALL {
        let gap = residuals::form_equivalence_gap(sys, phase, &sc.rule, sc.t).during(sc, "form_equivalence")?;
        out.record("form_equivalence", gap, sc.tol("form"));
    }
    Ok(())
}

fn residual_checks(sc: &Scenario, explicit: Option<&SystemState>, out: &mut Outcome) -> Result<(), RunError> {
    let mut identities = b"identity,state,gap,tol,pass\n".to_vec();
    let reports = match explicit {
        Some(sys) => {
            let reports = residuals::residual_report(sys, &sc.rule, sc.t).during(sc, "residual_report")?;
            for r in &reports {
                out.record(&format!("{}_{}", r.equation, r.phase), r.norm_inf, sc.tol("residual"));
            }
            let bc = residuals::boundary_residual(sys, &sc.rule, sc.t).during(sc, "boundary_conditions")?;
            let mut body = b"condition,value,tol,pass\n".to_vec();
            for (name, value) in &bc.conditions {
                let ok = out.record("boundary_conditions", *value, sc.tol("boundary"));
                body.extend(format!("\"{name}\",{value:e},{:e},{ok}\n", sc.tol("boundary")).bytes());
            }
            out.file("boundary.csv", body);
            identity_rows(sc, sys, 0, out, &mut identities)?;
            let continuity = reports
                .iter()
                .filter(|r| r.equation == Equation::Continuity)
                .map(|r| r.norm_inf)
                .fold(0.0, f64::max);
            if continuity <= 1e-9 {
                form_rows(sc, sys, out)?;
            } else {
                out.notes.push(format!("form equivalence skipped: continuity residual {continuity:e}"));
            }
            reports
        }
        None => {
            for i in 0..sc.count {
                identity_rows(sc, &random_state(sc, i as u64), i, out, &mut identities)?;
                form_rows(sc, &transported_state(sc, 1000 + i as u64, false), out)?;
            }
            residuals::residual_report(&random_state(sc, 0), &sc.rule, sc.t).during(sc, "residual_report")?
        }
    };
    out.file("residuals.csv", csv(|w| residuals::write_residual_csv(w, &reports)));
    out.file("identities.csv", identities);
    Ok(())
}

fn variation_checks(sc: &Scenario, explicit: Option<&SystemState>, out: &mut Outcome) -> Result<(), RunError> {
    let random;
    let sys = match explicit {
        Some(s) => s,
        None => {
            random = random_state(sc, 0);
            &random
        }
    };
    let rows = variation::variation_suite(sys, sc.count, sc.seed, &sc.rule, sc.t).during(sc, "variation_suite")?;
    let tol = sc.tol("variation");
    for row in &rows {
        out.record(&format!("gateaux_{}", row.theorem.name()), row.gap.relative(), tol);
    }
    out.file("variation.csv", csv(|w| variation::write_variation_csv(w, &rows, tol)));
    Ok(())
}

fn thermo_tolerance(sc: &Scenario, identity: &str) -> f64 {
    if identity == "entropy_production_negative_part" {
        sc.tol("entropy")
    } else if PotentialEquation::ALL.iter().any(|p| p.name() == identity) {
        sc.tol("potential")
    } else {
        sc.tol("identity")
    }
}

fn thermo_checks(sc: &Scenario, explicit: Option<&SystemState>, out: &mut Outcome) -> Result<(), RunError> {
    let states: Vec<SystemState> = match explicit {
        Some(s) => vec![s.clone()],
        None => (0..sc.count).map(|i| transported_state(sc, i as u64, true)).collect(),
    };
    let mut rows = Vec::new();
    for sys in &states {
        for phase in Phase::ALL {
            rows.extend(thermo::thermo_report(sys, phase, &sc.rule, sc.t).during(sc, "thermo_report")?);
        }
    }
    for r in &rows {
        out.record(&r.identity, r.gap, thermo_tolerance(sc, &r.identity));
    }
    out.file("thermo.csv", csv(|w| thermo::write_thermo_csv(w, &rows, |id| thermo_tolerance(sc, id))));
    Ok(())
}

fn drift_table(traj: &Trajectory) -> Vec<String> {
    let s0 = traj.samples[0].state;
    let n = traj.samples.len();
    let mut lines = vec![format!(
        "{:>12} {:>14} {:>12} {:>12} {:>12}",
        "t", "R", "drift_mass_A", "drift_mass_S", "gap_1_14"
    )];
    let picks = 10.min(n - 1).max(1);
    let mut last = usize::MAX;
    for k in 0..=picks {
        let i = k * (n - 1) / picks;
        if i == last {
            continue;
        }
        last = i;
        let s = &traj.samples[i];
        let da = s.state.inner_mass() / s0.inner_mass() - 1.0;
        let ds = s.state.surface_mass() / s0.surface_mass() - 1.0;
        lines.push(format!(
            "{:>12.6} {:>14.10} {:>12.3e} {:>12.3e} {:>12.3e}",
            s.state.t, s.state.radius, da, ds, s.energy_gap
        ));
    }
    lines
}

fn bubble_run(sc: &Scenario, job: &BubbleJob, out: &mut Outcome) -> Result<(), RunError> {
    let mut params = job.params.clone();
    params.ambient_pressure = match job.ambient {
        Some(p) => p,
        None => params.equilibrium_ambient(&job.initial).during(sc, "equilibrium")?,
    };
    let period = bubble::characteristic_period(&params, &job.initial).during(sc, "period")?;
    let missing = |what: &str| RunError {
        scenario: sc.name.clone(),
        check: "period".into(),
        message: format!("no stable oscillation at the initial state; set scenario.{what}"),
    };
    let dt = match (job.dt, period) {
        (Some(dt), _) => dt,
        (None, Some(p)) => 1e-3 * p,
        (None, None) => return Err(missing("dt")),
    };
    let t_end = match (job.t_end, period) {
        (Some(t), _) => t,
        (None, Some(p)) => job.periods * p,
        (None, None) => return Err(missing("t_end")),
    };
    let traj = bubble::integrate(&params, &job.initial, t_end, dt).during(sc, "integrate")?;
    let steps = traj.samples.len() - 1;
    out.notes.push(format!(
        "ambient pressure {:.12e}, period {}, dt {dt:e}, {steps} steps",
        params.ambient_pressure,
        period.map_or("none".into(), |p| format!("{p:.12e}"))
    ));
    let halted = match &traj.halted {
        None => 0.0,
        Some(e) => {
            out.notes.push(format!("halted: {e}"));
            f64::INFINITY
        }
    };
    out.record("completed", halted, 0.0);
    let (da, ds) = traj.mass_drift();
    out.record("mass_drift_A", da, sc.tol("mass"));
    out.record("mass_drift_S", ds, sc.tol("mass"));
    out.record("energy_ledger", traj.max_energy_gap(), sc.tol("energy"));

    let stride = job.stride.unwrap_or((steps / 10).max(1));
    let rows = bubble::consistency_check(&params, &traj, stride, &sc.rule).during(sc, "consistency")?;
    let mut body = b"t,mass_gap,kinetic_gap,surface_momentum,bulk_momentum\n".to_vec();
    for r in &rows {
        out.record("surface_momentum", r.surface_momentum, sc.tol("surface_momentum"));
        out.record("mass_audit", r.mass_gap, sc.tol("mass_audit"));
        out.record("kinetic_audit", r.kinetic_gap, sc.tol("kinetic_audit"));
        body.extend(
            format!(
                "{},{:e},{:e},{:e},{:e}\n",
                r.t, r.mass_gap, r.kinetic_gap, r.surface_momentum, r.bulk_momentum
            )
            .bytes(),
        );
    }
    let every = job.every.unwrap_or((steps / 1000).max(1));
    out.file("trajectory.csv", csv(|w| bubble::write_trajectory_csv(w, &traj, every)));
    out.file("consistency.csv", body);
    out.notes.extend(drift_table(&traj));
    Ok(())
}
