//! INI-style scenario files.
//!
//! ```text
//! [scenario]
//! kind = verify-ibp
//! [surface]
//! kind = ellipsoid
//! axes = 1, 1, 2
//! ```
//!
//! Full-line comments start with `#` or `;`. Expressions may be quoted.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use bulksurf::bubble::{BubbleParams, BubbleState};
use bulksurf::constitutive::{Eos, Phase, PhaseMaterial, PhaseState};
use bulksurf::expr::{parse, parse_with_vars, Expr, Var, VectorField};
use bulksurf::fixtures::ExpansionFlow;
use bulksurf::geometry::{DomainConfig, QuadratureRule, Slip, SurfaceChart, SurfaceKind};
use bulksurf::residuals::SystemState;
use thiserror::Error;

/// Where a value came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Override,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::Override => f.write_str("--override"),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown section [{section}]")]
    UnknownSection { line: usize, section: String },
    #[error("{origin}: unknown key `{key}`")]
    UnknownKey { key: String, origin: Origin },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { key: String, line: usize },
    #[error("missing key `{key}`")]
    Missing { key: String },
    #[error("{origin}: invalid value for `{key}`: {message}")]
    Invalid { key: String, origin: Origin, message: String },
    #[error("{0}")]
    Usage(String),
}

type Result<T> = std::result::Result<T, ConfigError>;

const SCENARIO_KEYS: &[&str] = &[
    "kind", "name", "seed", "t", "t1", "t2", "step", "count", "dt", "t_end", "periods", "ambient", "every", "stride",
];
const SURFACE_KEYS: &[&str] = &["kind", "radius", "axes", "scale", "base", "eps", "mode", "outer", "slip"];
const MATERIAL_KEYS: &[&str] = &["mu", "lambda", "kappa", "eos", "p", "cv", "r_gas"];
const FIELD_KEYS: &[&str] = &[
    "source", "f", "g", "j", "rate", "spin", "radius", "speed", "rho_a", "rho_b", "rho_s", "v_a", "v_b", "v_s",
    "theta_a", "theta_b", "theta_s", "pi_a", "pi_b", "pi_s", "e_a", "e_b", "e_s", "entropy_a", "entropy_b",
    "entropy_s",
];
const QUADRATURE_KEYS: &[&str] = &["n", "cap", "time_nodes"];
pub const TOLERANCE_KEYS: &[&str] = &[
    "pointwise",
    "flux",
    "curvature",
    "gap",
    "residual",
    "boundary",
    "identity",
    "form",
    "variation",
    "potential",
    "entropy",
    "mass",
    "energy",
    "surface_momentum",
    "mass_audit",
    "kinetic_audit",
];

fn schema(section: &str) -> Option<&'static [&'static str]> {
    Some(match section {
        "scenario" => SCENARIO_KEYS,
        "surface" => SURFACE_KEYS,
        "material.A" | "material.B" | "material.S" => MATERIAL_KEYS,
        "fields" => FIELD_KEYS,
        "quadrature" => QUADRATURE_KEYS,
        "tolerances" => TOLERANCE_KEYS,
        _ => return None,
    })
}

#[derive(Clone, Debug)]
struct Entry {
    value: String,
    origin: Origin,
}

/// Raw `section -> key -> value` table.
#[derive(Clone, Debug, Default)]
pub struct Ini {
    entries: BTreeMap<(String, String), Entry>,
    sections: BTreeSet<String>,
}

fn unquote(v: &str) -> &str {
    v.strip_prefix('"').and_then(|s| s.strip_suffix('"')).unwrap_or(v)
}

impl Ini {
    pub fn parse(text: &str) -> Result<Ini> {
        let mut ini = Ini::default();
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let s = raw.trim();
            if s.is_empty() || s.starts_with('#') || s.starts_with(';') {
                continue;
            }
            if let Some(name) = s.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError::Syntax {
                        line,
                        message: "unterminated section header".into(),
                    })?
                    .trim();
                if schema(name).is_none() {
                    return Err(ConfigError::UnknownSection {
                        line,
                        section: name.into(),
                    });
                }
                ini.sections.insert(name.to_string());
                section = Some(name.into());
                continue;
            }
            let (key, value) = s.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                message: format!("expected `key = value`, found `{s}`"),
            })?;
            let sec = section.clone().ok_or_else(|| ConfigError::Syntax {
                line,
                message: "key before any section".into(),
            })?;
            let value = value.trim();
            if value.starts_with('"') && (value.len() < 2 || !value.ends_with('"')) {
                return Err(ConfigError::Syntax {
                    line,
                    message: "unterminated string".into(),
                });
            }
            ini.insert(&sec, key.trim(), value, Origin::Line(line))?;
        }
        Ok(ini)
    }

    pub fn load(path: &Path) -> Result<Ini> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ini::parse(&text)
    }

    fn insert(&mut self, section: &str, key: &str, value: &str, origin: Origin) -> Result<()> {
        let full = format!("{section}.{key}");
        if !schema(section).is_some_and(|keys| keys.contains(&key)) {
            return Err(ConfigError::UnknownKey { key: full, origin });
        }
        let slot = (section.to_string(), key.to_string());
        if let (Some(old), Origin::Line(line)) = (self.entries.get(&slot), origin) {
            if matches!(old.origin, Origin::Line(_)) {
                return Err(ConfigError::Duplicate { key: full, line });
            }
        }
        self.entries.insert(
            slot,
            Entry {
                value: value.to_string(),
                origin,
            },
        );
        Ok(())
    }

    /// Applies `key=value`; a bare key belongs to `[scenario]`, otherwise
    /// the section is everything before the last dot.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (key, value) = spec
            .split_once('=')
            .ok_or_else(|| ConfigError::Usage(format!("override `{spec}` is not of the form key=value")))?;
        let key = key.trim();
        let (section, name) = key.rsplit_once('.').unwrap_or(("scenario", key));
        self.insert(section, name, value.trim(), Origin::Override)
    }

    fn raw(&self, section: &str, key: &str) -> Option<(&str, Origin)> {
        self.entries
            .get(&(section.to_string(), key.to_string()))
            .map(|e| (unquote(&e.value), e.origin))
    }

    fn has_section(&self, section: &str) -> bool {
        self.sections.contains(section) || self.entries.keys().any(|(s, _)| s == section)
    }

    fn get<T>(&self, section: &str, key: &str, conv: impl Fn(&str) -> std::result::Result<T, String>) -> Result<Option<T>> {
        match self.raw(section, key) {
            None => Ok(None),
            Some((v, origin)) => conv(v).map(Some).map_err(|message| ConfigError::Invalid {
                key: format!("{section}.{key}"),
                origin,
                message,
            }),
        }
    }

    fn number(&self, section: &str, key: &str) -> Result<Option<f64>> {
        self.get(section, key, |v| {
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| format!("`{v}` is not a decimal"))
        })
    }

    fn number_or(&self, section: &str, key: &str, default: f64) -> Result<f64> {
        Ok(self.number(section, key)?.unwrap_or(default))
    }

    fn integer(&self, section: &str, key: &str) -> Result<Option<u64>> {
        self.get(section, key, |v| v.parse::<u64>().map_err(|_| format!("`{v}` is not a nonnegative integer")))
    }

    fn word(&self, section: &str, key: &str) -> Option<(&str, Origin)> {
        self.raw(section, key)
    }

    fn expr(&self, section: &str, key: &str) -> Result<Option<Expr>> {
        self.get(section, key, |v| parse(v).map_err(|e| e.to_string()))
    }

    fn vector(&self, section: &str, key: &str) -> Result<Option<VectorField>> {
        self.get(section, key, |v| {
            let parts = split_top_level(v);
            if parts.len() != 3 {
                return Err(format!("expected three comma-separated components, found {}", parts.len()));
            }
            let c: Vec<Expr> = parts.iter().map(|p| parse(p).map_err(|e| e.to_string())).collect::<std::result::Result<_, _>>()?;
            Ok(VectorField::new(c[0].clone(), c[1].clone(), c[2].clone()))
        })
    }

    fn invalid(&self, section: &str, key: &str, message: String) -> ConfigError {
        ConfigError::Invalid {
            key: format!("{section}.{key}"),
            origin: self.raw(section, key).map_or(Origin::Override, |r| r.1),
            message,
        }
    }
}

fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(s[start..].trim());
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Geometry,
    Ibp,
    Transport,
    Residuals,
    Variation,
    Thermo,
    Bubble,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Geometry => "verify-geometry",
            Kind::Ibp => "verify-ibp",
            Kind::Transport => "verify-transport",
            Kind::Residuals => "verify-residuals",
            Kind::Variation => "verify-variation",
            Kind::Thermo => "verify-thermo",
            Kind::Bubble => "bubble",
        }
    }

    fn from_name(s: &str) -> Option<Kind> {
        [
            Kind::Geometry,
            Kind::Ibp,
            Kind::Transport,
            Kind::Residuals,
            Kind::Variation,
            Kind::Thermo,
            Kind::Bubble,
        ]
        .into_iter()
        .find(|k| k.name() == s)
    }

    fn tolerance_defaults(self) -> &'static [(&'static str, f64)] {
        match self {
            Kind::Geometry => &[("pointwise", 1e-12), ("flux", 1e-8), ("curvature", 1e-9)],
            Kind::Ibp => &[("gap", 1e-8)],
            Kind::Transport => &[("gap", 1e-7)],
            Kind::Residuals => &[("residual", 1e-10), ("boundary", 1e-10), ("identity", 1e-10), ("form", 1e-9)],
            Kind::Variation => &[("variation", 1e-6)],
            Kind::Thermo => &[("identity", 1e-9), ("potential", 1e-9), ("entropy", 1e-12)],
            Kind::Bubble => &[
                ("mass", 1e-10),
                ("energy", 1e-6),
                ("surface_momentum", 1e-8),
                ("mass_audit", 1e-8),
                ("kinetic_audit", 1e-6),
            ],
        }
    }
}

/// Star-shaped surface family, multiplied by a time scale when the
/// scenario moves it.
#[derive(Clone, Debug)]
pub enum Shape {
    Sphere { radius: Expr },
    Ellipsoid { axes: [f64; 3], scale: Expr },
    Perturbed { base: Expr, eps: f64, mode: Expr },
}

impl Shape {
    pub fn kind(&self, s: Expr) -> SurfaceKind {
        match self {
            Shape::Sphere { radius } => SurfaceKind::Sphere { radius: radius * &s },
            Shape::Ellipsoid { axes, scale } => SurfaceKind::Ellipsoid {
                axes: *axes,
                scale: scale * &s,
            },
            Shape::Perturbed { base, eps, mode } => SurfaceKind::PerturbedSphere {
                base: base * &s,
                eps: *eps,
                mode: mode.clone(),
            },
        }
    }

    pub fn chart(&self) -> SurfaceChart {
        SurfaceChart::new(self.kind(Expr::one()))
    }

    /// Radius of a sphere that does not move.
    pub fn fixed_sphere_radius(&self) -> Option<f64> {
        match self {
            Shape::Sphere { radius } => radius.as_const(),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    Explicit,
    Random,
}

#[derive(Clone, Debug)]
pub enum Job {
    Geometry,
    Ibp { cases: Option<Vec<(Expr, Expr, usize)>> },
    Transport { f: Expr, flow: ExpansionFlow, step: f64 },
    Residuals { state: Option<Box<SystemState>> },
    Variation { state: Option<Box<SystemState>> },
    Thermo { state: Option<Box<SystemState>> },
    Bubble(Box<BubbleJob>),
}

#[derive(Clone, Debug)]
pub struct BubbleJob {
    pub params: BubbleParams,
    pub initial: BubbleState,
    /// `None` means the Young-Laplace ambient of the initial state.
    pub ambient: Option<f64>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub periods: f64,
    pub every: Option<usize>,
    pub stride: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub kind: Kind,
    pub seed: u64,
    pub shape: Shape,
    pub outer: f64,
    pub slip: Slip,
    pub rule: QuadratureRule,
    pub time_nodes: usize,
    pub t: f64,
    pub t1: f64,
    pub t2: f64,
    pub count: usize,
    pub tolerances: BTreeMap<String, f64>,
    pub job: Job,
}

impl Scenario {
    pub fn domain(&self) -> DomainConfig {
        DomainConfig::new(self.outer, self.shape.chart(), self.slip)
    }

    pub fn tol(&self, name: &str) -> f64 {
        self.tolerances[name]
    }

    pub fn with_nodes(&self, n: usize) -> Scenario {
        let mut s = self.clone();
        s.rule.n = n;
        s
    }

    /// Builds and validates a scenario. `fallback_name` is used when the
    /// file has no `scenario.name`.
    pub fn from_ini(ini: &Ini, fallback_name: &str, seed: Option<u64>, tol_scale: f64) -> Result<Scenario> {
        let (kind_word, origin) = ini.word("scenario", "kind").ok_or(ConfigError::Missing {
            key: "scenario.kind".into(),
        })?;
        let kind = Kind::from_name(kind_word).ok_or_else(|| ConfigError::Invalid {
            key: "scenario.kind".into(),
            origin,
            message: format!("unknown scenario kind `{kind_word}`"),
        })?;
        let name = ini.word("scenario", "name").map_or(fallback_name, |w| w.0).to_string();
        if name.is_empty() || name.contains(['/', '\\', ',']) {
            return Err(ini.invalid("scenario", "name", "must be nonempty without `/`, `\\` or `,`".into()));
        }
        let seed = match seed {
            Some(s) => s,
            None => ini.integer("scenario", "seed")?.unwrap_or(0),
        };

        let n = ini.integer("quadrature", "n")?.unwrap_or(24) as usize;
        if n < 8 {
            return Err(ini.invalid("quadrature", "n", format!("needs at least 8 nodes, got {n}")));
        }
        let rule = match ini.number("quadrature", "cap")? {
            Some(cap) if cap > 0.0 => QuadratureRule::with_cap(n, cap),
            Some(cap) => return Err(ini.invalid("quadrature", "cap", format!("cap angle must be positive, got {cap}"))),
            None => QuadratureRule::new(n),
        };
        let time_nodes = ini.integer("quadrature", "time_nodes")?.unwrap_or(8) as usize;

        let mut tolerances = BTreeMap::new();
        for &(key, default) in kind.tolerance_defaults() {
            let v = ini.number_or("tolerances", key, default)?;
            if !(v > 0.0) {
                return Err(ini.invalid("tolerances", key, format!("tolerance must be positive, got {v}")));
            }
            tolerances.insert(key.to_string(), v * tol_scale);
        }
        for key in TOLERANCE_KEYS {
            if ini.raw("tolerances", key).is_some() && !tolerances.contains_key(*key) {
                return Err(ini.invalid("tolerances", key, format!("not used by {} scenarios", kind.name())));
            }
        }

        let shape = surface_shape(ini)?;
        let outer = ini.number_or("surface", "outer", 3.0)?;
        let slip = match ini.integer("surface", "slip")?.unwrap_or(0) {
            0 => Slip::NoSlip,
            1 => Slip::Slip,
            r => return Err(ini.invalid("surface", "slip", format!("slip flag must be 0 or 1, got {r}"))),
        };
        let t = ini.number_or("scenario", "t", 0.0)?;
        let t1 = ini.number_or("scenario", "t1", 0.0)?;
        let t2 = ini.number_or("scenario", "t2", 0.5)?;
        let count = ini.integer("scenario", "count")?.unwrap_or(10) as usize;

        let mut sc = Scenario {
            name,
            kind,
            seed,
            shape,
            outer,
            slip,
            rule,
            time_nodes,
            t,
            t1,
            t2,
            count,
            tolerances,
            job: Job::Geometry,
        };
        sc.job = match kind {
            Kind::Geometry => Job::Geometry,
            Kind::Ibp => Job::Ibp { cases: ibp_case(ini)? },
            Kind::Transport => Job::Transport {
                f: ini
                    .expr("fields", "f")?
                    .unwrap_or_else(|| parse("(1 + x1^2 + sin(x2 + t)) * exp(-t*x3/4)").expect("static expression")),
                flow: ExpansionFlow {
                    rate: ini.number_or("fields", "rate", 0.2)?,
                    spin: ini.number_or("fields", "spin", 0.0)?,
                },
                step: ini.number_or("scenario", "step", 1e-3)?,
            },
            Kind::Residuals => Job::Residuals {
                state: explicit_state(ini, &sc)?,
            },
            Kind::Variation => Job::Variation {
                state: explicit_state(ini, &sc)?,
            },
            Kind::Thermo => Job::Thermo {
                state: explicit_state(ini, &sc)?,
            },
            Kind::Bubble => Job::Bubble(Box::new(bubble_job(ini)?)),
        };
        Ok(sc)
    }
}

fn surface_shape(ini: &Ini) -> Result<Shape> {
    let one = || Expr::one();
    let kind = ini.word("surface", "kind").map_or("sphere", |w| w.0);
    Ok(match kind {
        "sphere" => Shape::Sphere {
            radius: positive_expr(ini, "surface", "radius")?.unwrap_or_else(one),
        },
        "ellipsoid" => {
            let axes = ini
                .get("surface", "axes", |v| {
                let parts: Vec<f64> = v.split(',').map(|p| p.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|e| e.to_string())?;
                match parts[..] {
                    [a, b, c] if a > 0.0 && b > 0.0 && c > 0.0 => Ok([a, b, c]),
                    _ => Err("expected three positive semi-axes".to_string()),
                }
            })?
                .unwrap_or([1.0, 1.0, 2.0]);
            Shape::Ellipsoid {
                axes,
                scale: positive_expr(ini, "surface", "scale")?.unwrap_or_else(one),
            }
        }
        "perturbed_sphere" => {
            let eps = ini.number_or("surface", "eps", 0.2)?;
            if eps.abs() >= 0.5 {
                return Err(ini.invalid("surface", "eps", format!("|eps| must stay below 0.5 to keep the P2 profile positive, got {eps}")));
            }
            Shape::Perturbed {
                base: positive_expr(ini, "surface", "base")?.unwrap_or_else(one),
                eps,
                mode: ini.expr("surface", "mode")?.unwrap_or_else(SurfaceKind::p2_mode),
            }
        }
        other => {
            return Err(ini.invalid(
                "surface",
                "kind",
                format!("expected sphere, ellipsoid or perturbed_sphere, got `{other}`"),
            ))
        }
    })
}

fn positive_expr(ini: &Ini, section: &str, key: &str) -> Result<Option<Expr>> {
    let e = ini.expr(section, key)?;
    if let Some(c) = e.as_ref().and_then(|e| e.as_const()) {
        if !(c > 0.0) {
            return Err(ini.invalid(section, key, format!("must be positive, got {c}")));
        }
    }
    Ok(e)
}

fn ibp_case(ini: &Ini) -> Result<Option<Vec<(Expr, Expr, usize)>>> {
    let (f, g) = (ini.expr("fields", "f")?, ini.expr("fields", "g")?);
    match (f, g) {
        (None, None) => Ok(None),
        (Some(f), Some(g)) => {
            let j = ini.integer("fields", "j")?.unwrap_or(1);
            if !(1..=3).contains(&j) {
                return Err(ini.invalid("fields", "j", format!("direction must be 1, 2 or 3, got {j}")));
            }
            Ok(Some(vec![(f, g, j as usize - 1)]))
        }
        _ => Err(ConfigError::Missing {
            key: "fields.f and fields.g".into(),
        }),
    }
}

fn source(ini: &Ini) -> Result<Source> {
    match ini.word("fields", "source") {
        None | Some(("random", _)) => Ok(Source::Random),
        Some(("explicit", _)) => Ok(Source::Explicit),
        Some((other, _)) => Err(ini.invalid("fields", "source", format!("expected explicit or random, got `{other}`"))),
    }
}

fn material(ini: &Ini, phase: Phase) -> Result<PhaseMaterial> {
    let sec = format!("material.{phase}");
    let sec = sec.as_str();
    let eos = match ini.word(sec, "eos").map_or("explicit", |w| w.0) {
        "explicit" => Eos::Explicit,
        "barotropic" => {
            let src = ini.raw(sec, "p").ok_or(ConfigError::Missing { key: format!("{sec}.p") })?.0;
            Eos::barotropic(src).map_err(|e| ini.invalid(sec, "p", e.to_string()))?
        }
        "ideal" => Eos::IdealGas {
            cv: ini.number(sec, "cv")?.ok_or(ConfigError::Missing { key: format!("{sec}.cv") })?,
            r_gas: ini.number(sec, "r_gas")?.ok_or(ConfigError::Missing {
                key: format!("{sec}.r_gas"),
            })?,
        },
        other => return Err(ini.invalid(sec, "eos", format!("expected barotropic, ideal or explicit, got `{other}`"))),
    };
    PhaseMaterial::new(
        phase,
        ini.number_or(sec, "mu", 0.0)?,
        ini.number_or(sec, "lambda", 0.0)?,
        ini.number_or(sec, "kappa", 0.0)?,
        eos,
    )
    .map_err(|e| ConfigError::Invalid {
        key: sec.to_string(),
        origin: ini.raw(sec, "mu").map_or(Origin::Override, |r| r.1),
        message: e.to_string(),
    })
}

fn explicit_state(ini: &Ini, sc: &Scenario) -> Result<Option<Box<SystemState>>> {
    if source(ini)? == Source::Random {
        return Ok(None);
    }
    let mut mats = Vec::new();
    let mut states = Vec::new();
    for phase in Phase::ALL {
        let sfx = phase.name().to_lowercase();
        if !ini.has_section(&format!("material.{phase}")) {
            return Err(ConfigError::Missing {
                key: format!("material.{phase}"),
            });
        }
        mats.push(material(ini, phase)?);
        let rho = ini.expr("fields", &format!("rho_{sfx}"))?.ok_or(ConfigError::Missing {
            key: format!("fields.rho_{sfx}"),
        })?;
        let v = ini.vector("fields", &format!("v_{sfx}"))?.unwrap_or_else(VectorField::zero);
        let theta = ini.expr("fields", &format!("theta_{sfx}"))?.unwrap_or_else(Expr::one);
        let mut st = PhaseState::new(rho, v, theta);
        if let Some(pi) = ini.expr("fields", &format!("pi_{sfx}"))? {
            st = st.with_pressure(pi);
        }
        if let Some(e) = ini.expr("fields", &format!("e_{sfx}"))? {
            st = st.with_energy(e);
        }
        if let Some(s) = ini.expr("fields", &format!("entropy_{sfx}"))? {
            st = st.with_entropy(s);
        }
        states.push(st);
    }
    let mats: [PhaseMaterial; 3] = mats.try_into().expect("three phases");
    let states: [PhaseState; 3] = states.try_into().expect("three phases");
    Ok(Some(Box::new(SystemState::new(sc.domain(), mats, states))))
}

fn law(ini: &Ini, section: &str) -> Result<Expr> {
    let (src, _) = ini.raw(section, "p").ok_or(ConfigError::Missing {
        key: format!("{section}.p"),
    })?;
    parse_with_vars(src, &[("rho", Var::X1)]).map_err(|e| ini.invalid(section, "p", e.to_string()))
}

fn bubble_job(ini: &Ini) -> Result<BubbleJob> {
    let positive = |sec: &str, key: &str, default: Option<f64>| -> Result<f64> {
        let v = match (ini.number(sec, key)?, default) {
            (Some(v), _) | (None, Some(v)) => v,
            (None, None) => return Err(ConfigError::Missing { key: format!("{sec}.{key}") }),
        };
        if !(v > 0.0) {
            return Err(ini.invalid(sec, key, format!("must be positive, got {v}")));
        }
        Ok(v)
    };
    let params = BubbleParams {
        mu_inner: ini.number_or("material.A", "mu", 0.0)?,
        lambda_inner: ini.number_or("material.A", "lambda", 0.0)?,
        mu_surface: ini.number_or("material.S", "mu", 0.0)?,
        lambda_surface: ini.number_or("material.S", "lambda", 0.0)?,
        law_inner: law(ini, "material.A")?,
        law_surface: law(ini, "material.S")?,
        ambient_pressure: 0.0,
    };
    let initial = BubbleState {
        t: 0.0,
        radius: positive("fields", "radius", Some(1.0))?,
        speed: ini.number_or("fields", "speed", 0.0)?,
        rho_inner: positive("fields", "rho_a", None)?,
        rho_surface: positive("fields", "rho_s", None)?,
    };
    let ambient = match ini.word("scenario", "ambient") {
        None | Some(("equilibrium", _)) => None,
        Some(_) => ini.number("scenario", "ambient")?,
    };
    let dt = match ini.number("scenario", "dt")? {
        Some(v) if v > 0.0 => Some(v),
        Some(v) => return Err(ini.invalid("scenario", "dt", format!("must be positive, got {v}"))),
        None => None,
    };
    let t_end = ini.number("scenario", "t_end")?;
    Ok(BubbleJob {
        params,
        initial,
        ambient,
        dt,
        t_end,
        periods: positive("scenario", "periods", Some(10.0))?,
        every: ini.integer("scenario", "every")?.map(|v| v.max(1) as usize),
        stride: ini.integer("scenario", "stride")?.map(|v| v.max(1) as usize),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(text: &str) -> Result<Scenario> {
        Scenario::from_ini(&Ini::parse(text)?, "test", None, 1.0)
    }

    #[test]
    fn unknown_key_is_named_with_its_line() {
        let err = Ini::parse("[scenario]\nkind = verify-ibp\n\n[surface]\nradus = 2\n").unwrap_err();
        assert!(matches!(&err, ConfigError::UnknownKey { key, origin: Origin::Line(5) } if key == "surface.radus"), "{err}");
        assert!(err.to_string().contains("surface.radus"));
    }

    #[test]
    fn sections_and_duplicates() {
        assert!(matches!(Ini::parse("[mesh]\n"), Err(ConfigError::UnknownSection { line: 1, .. })));
        assert!(matches!(
            Ini::parse("[scenario]\nkind = bubble\nkind = bubble\n"),
            Err(ConfigError::Duplicate { line: 3, .. })
        ));
        assert!(matches!(Ini::parse("kind = bubble\n"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(Ini::parse("[scenario]\nkind\n"), Err(ConfigError::Syntax { line: 2, .. })));
    }

    #[test]
    fn overrides_replace_values_and_reject_unknown_keys() {
        let mut ini = Ini::parse("[scenario]\nkind = bubble\ndt = 1e-3\n").unwrap();
        ini.apply_override("dt=1e-4").unwrap();
        ini.apply_override("material.A.mu = 0.5").unwrap();
        assert_eq!(ini.raw("scenario", "dt").unwrap().0, "1e-4");
        assert_eq!(ini.raw("material.A", "mu").unwrap().0, "0.5");
        assert!(matches!(ini.apply_override("material.A.nu=1"), Err(ConfigError::UnknownKey { origin: Origin::Override, .. })));
    }

    #[test]
    fn invariants_are_enforced() {
        let base = "[scenario]\nkind = verify-geometry\n";
        assert!(scenario(base).is_ok());
        assert!(matches!(scenario(&format!("{base}[quadrature]\nn = 6\n")), Err(ConfigError::Invalid { .. })));
        assert!(matches!(scenario(&format!("{base}[tolerances]\npointwise = 0\n")), Err(ConfigError::Invalid { .. })));
        assert!(matches!(scenario(&format!("{base}[tolerances]\nmass = 1e-3\n")), Err(ConfigError::Invalid { .. })));
        assert!(matches!(scenario(&format!("{base}[surface]\nradius = \"1 + \"\n")), Err(ConfigError::Invalid { .. })));
        assert!(matches!(scenario("[scenario]\nkind = verify-everything\n"), Err(ConfigError::Invalid { .. })));
    }

    #[test]
    fn tolerance_scale_applies() {
        let sc = Scenario::from_ini(&Ini::parse("[scenario]\nkind = verify-ibp\n").unwrap(), "x", None, 10.0).unwrap();
        assert!((sc.tol("gap") - 1e-7).abs() < 1e-22);
    }

    #[test]
    fn vectors_split_at_top_level_commas() {
        assert_eq!(split_top_level("sin(x1), -x2, (x1 + x3)"), vec!["sin(x1)", "-x2", "(x1 + x3)"]);
    }
}
