//! Run configuration: `[section]` headers, `key = value` lines, `#` comments.
//!
//! Every problem kind starts from its own defaults table; keys in the file
//! override single entries. Unknown sections or keys are rejected.

use chns_core::materials::PhaseParams;
use chns_core::mesh::{BoundaryCondition, SideConditions, StructuredMesh};
use chns_core::stepper::TimeControl;
use std::collections::HashMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown section [{section}]")]
    UnknownSection { line: usize, section: String },
    #[error("line {line}: unknown key `{key}` in section [{section}]")]
    UnknownKey { line: usize, section: String, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: `{key}` expects {expected}, got `{value}`")]
    Type {
        line: usize,
        key: String,
        expected: &'static str,
        value: String,
    },
    #[error("missing required key `{0}`")]
    Missing(String),
    #[error("line {line}: {msg}")]
    Conflict { line: usize, msg: String },
    #[error("{}`{key}`: {msg}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Invalid {
        key: String,
        line: Option<usize>,
        msg: String,
    },
}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Converge,
    Bubble1,
    Bubble2,
    RayleighTaylor,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Converge => "converge",
            ProblemKind::Bubble1 => "bubble1",
            ProblemKind::Bubble2 => "bubble2",
            ProblemKind::RayleighTaylor => "rayleigh-taylor",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "converge" => Some(ProblemKind::Converge),
            "bubble1" => Some(ProblemKind::Bubble1),
            "bubble2" => Some(ProblemKind::Bubble2),
            "rayleigh-taylor" | "rt" => Some(ProblemKind::RayleighTaylor),
            _ => None,
        }
    }
}

/// A length that is either absolute or proportional to a reference scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scaled {
    Absolute(f64),
    Factor(f64),
}

impl Scaled {
    pub fn resolve(self, reference: f64) -> f64 {
        match self {
            Scaled::Absolute(v) => v,
            Scaled::Factor(f) => f * reference,
        }
    }

    fn value(self) -> f64 {
        match self {
            Scaled::Absolute(v) | Scaled::Factor(v) => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    Cfl(f64),
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshConfig {
    pub nx: usize,
    pub ny: usize,
    pub bounds: [f64; 4],
    pub periodic_x: bool,
    pub periodic_y: bool,
    pub sides: SideConditions,
}

impl MeshConfig {
    pub fn build(&self) -> chns_core::Result<StructuredMesh> {
        StructuredMesh::new(self.nx, self.ny, self.bounds, self.periodic_x, self.periodic_y)
    }

    pub fn h(&self) -> f64 {
        let hx = (self.bounds[1] - self.bounds[0]) / self.nx as f64;
        let hy = (self.bounds[3] - self.bounds[2]) / self.ny as f64;
        hx.min(hy)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Physics {
    pub rho1: f64,
    pub rho2: f64,
    pub nu1: f64,
    pub nu2: f64,
    /// Reynolds number; when set both viscosities are `sqrt(2) / re`.
    pub re: Option<f64>,
    /// Surface tension, absolute or per unit `eps`.
    pub sigma: Scaled,
    pub g: f64,
    /// Interface width, absolute or per unit mesh size.
    pub eps: Scaled,
    /// Mobility coefficient per unit `eps`.
    pub gamma_factor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kind: ProblemKind,
    pub mesh: MeshConfig,
    pub k: usize,
    pub alpha: f64,
    pub quad_volume: usize,
    pub quad_edge: usize,
    /// `None` for the convergence driver, which uses `dt = h^{(k+1)/2}`.
    pub step: Option<StepRule>,
    pub t_end: f64,
    pub v_floor: f64,
    pub dt_max: f64,
    pub physics: Physics,
    pub csv: String,
    /// Time between VTK snapshots; `0` writes the initial and final state only.
    pub vtk_period: f64,
    /// Time between benchmark records; `0` records every step.
    pub series_period: f64,
    pub contour_samples: usize,
    pub region_points: usize,
    pub levels: Vec<usize>,
    /// Step counts of a temporal sweep on the last level (empty: spatial sweep).
    pub time_steps: Vec<usize>,
}

impl RunConfig {
    /// Sets `k` and the quadrature and sampling sizes that follow it.
    pub fn set_degree(&mut self, k: usize) {
        self.k = k;
        self.quad_volume = k + 2;
        self.quad_edge = k + 2;
        self.contour_samples = 2 * (k + 1);
        self.region_points = 2 * (k + 1);
    }

    /// Defaults of a problem kind.
    pub fn defaults(kind: ProblemKind) -> Self {
        use BoundaryCondition::{Natural, NoSlip, Slip};
        let walls = [NoSlip, Slip, NoSlip, Slip];
        let k = 2;
        let base = RunConfig {
            kind,
            mesh: MeshConfig {
                nx: 32,
                ny: 64,
                bounds: [0.0, 1.0, 0.0, 2.0],
                periodic_x: false,
                periodic_y: false,
                sides: walls,
            },
            k,
            alpha: 4.0,
            quad_volume: k + 2,
            quad_edge: k + 2,
            step: Some(StepRule::Fixed(0.005)),
            t_end: 3.0,
            v_floor: 1e-8,
            dt_max: 0.1,
            physics: Physics {
                rho1: 1000.0,
                rho2: 100.0,
                nu1: 10.0,
                nu2: 1.0,
                re: None,
                sigma: Scaled::Absolute(24.5),
                g: 0.98,
                eps: Scaled::Factor(0.64),
                gamma_factor: 1e-3,
            },
            csv: "series.csv".into(),
            vtk_period: 0.0,
            series_period: 0.0,
            contour_samples: 2 * (k + 1),
            region_points: 2 * (k + 1),
            levels: Vec::new(),
            time_steps: Vec::new(),
        };
        match kind {
            ProblemKind::Bubble1 => base,
            ProblemKind::Bubble2 => RunConfig {
                physics: Physics {
                    rho2: 1.0,
                    nu2: 0.1,
                    sigma: Scaled::Absolute(1.96),
                    ..base.physics
                },
                ..base
            },
            ProblemKind::RayleighTaylor => RunConfig {
                mesh: MeshConfig {
                    nx: 32,
                    ny: 256,
                    bounds: [0.0, 0.5, -2.0, 2.0],
                    ..base.mesh
                },
                step: Some(StepRule::Cfl(0.1)),
                t_end: 2.5,
                series_period: 0.25,
                physics: Physics {
                    rho1: 3.0,
                    rho2: 1.0,
                    nu1: 2f64.sqrt() / 1000.0,
                    nu2: 2f64.sqrt() / 1000.0,
                    re: Some(1000.0),
                    sigma: Scaled::Factor(0.01),
                    g: 2.0,
                    eps: Scaled::Factor(1.28),
                    gamma_factor: 1e-3,
                },
                ..base
            },
            ProblemKind::Converge => RunConfig {
                mesh: MeshConfig {
                    nx: 8,
                    ny: 8,
                    bounds: [0.0, 1.0, 0.0, 1.0],
                    periodic_x: true,
                    periodic_y: true,
                    sides: [Natural; 4],
                },
                step: None,
                t_end: 0.5,
                csv: "convergence.csv".into(),
                physics: Physics {
                    rho1: 100.0,
                    rho2: 10.0,
                    nu1: 10.0,
                    nu2: 1.0,
                    re: None,
                    sigma: Scaled::Absolute(10.0),
                    g: 0.0,
                    eps: Scaled::Absolute(0.04),
                    gamma_factor: 1e-3,
                },
                levels: vec![8, 16, 32],
                ..base
            },
        }
    }

    pub fn time_control(&self) -> Option<TimeControl> {
        self.step.map(|s| match s {
            StepRule::Fixed(dt) => TimeControl::Fixed { dt },
            StepRule::Cfl(cfl) => TimeControl::Cfl {
                cfl,
                v_floor: self.v_floor,
                dt_max: self.dt_max,
            },
        })
    }

    /// Model parameters for mesh size `h`.
    pub fn phase_params(&self, h: f64) -> PhaseParams {
        let p = &self.physics;
        let eps = p.eps.resolve(h);
        let (nu1, nu2) = match p.re {
            Some(re) => (2f64.sqrt() / re, 2f64.sqrt() / re),
            None => (p.nu1, p.nu2),
        };
        PhaseParams {
            rho1: p.rho1,
            rho2: p.rho2,
            nu1,
            nu2,
            sigma: p.sigma.resolve(eps),
            eps,
            gamma: p.gamma_factor * eps,
        }
    }

    /// Serializes every resolved field; parsing the result yields `self`.
    pub fn to_ini(&self) -> String {
        let mut s = String::new();
        let bc = |b: BoundaryCondition| match b {
            BoundaryCondition::Natural => "natural",
            BoundaryCondition::NoSlip => "noslip",
            BoundaryCondition::Slip => "slip",
        };
        let list = |v: &[usize]| v.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(", ");
        let m = &self.mesh;
        let p = &self.physics;
        let _ = writeln!(s, "[problem]\nkind = {}\n", self.kind.name());
        let _ = writeln!(
            s,
            "[mesh]\nnx = {}\nny = {}\nx0 = {:?}\nx1 = {:?}\ny0 = {:?}\ny1 = {:?}\nperiodic_x = {}\nperiodic_y = {}\nbottom = {}\nright = {}\ntop = {}\nleft = {}\n",
            m.nx,
            m.ny,
            m.bounds[0],
            m.bounds[1],
            m.bounds[2],
            m.bounds[3],
            m.periodic_x,
            m.periodic_y,
            bc(m.sides[0]),
            bc(m.sides[1]),
            bc(m.sides[2]),
            bc(m.sides[3])
        );
        let _ = writeln!(
            s,
            "[discretization]\nk = {}\nalpha = {:?}\nquad_volume = {}\nquad_edge = {}\n",
            self.k, self.alpha, self.quad_volume, self.quad_edge
        );
        let _ = writeln!(s, "[time]");
        match self.step {
            Some(StepRule::Cfl(c)) => {
                let _ = writeln!(s, "cfl = {c:?}");
            }
            Some(StepRule::Fixed(dt)) => {
                let _ = writeln!(s, "dt = {dt:?}");
            }
            None => {}
        }
        let _ = writeln!(s, "t_end = {:?}\nv_floor = {:?}\ndt_max = {:?}\n", self.t_end, self.v_floor, self.dt_max);
        let _ = writeln!(s, "[physics]\nrho1 = {:?}\nrho2 = {:?}", p.rho1, p.rho2);
        match p.re {
            Some(re) => {
                let _ = writeln!(s, "re = {re:?}");
            }
            None => {
                let _ = writeln!(s, "nu1 = {:?}\nnu2 = {:?}", p.nu1, p.nu2);
            }
        }
        match p.sigma {
            Scaled::Absolute(v) => {
                let _ = writeln!(s, "sigma = {v:?}");
            }
            Scaled::Factor(f) => {
                let _ = writeln!(s, "sigma_factor = {f:?}");
            }
        }
        match p.eps {
            Scaled::Absolute(v) => {
                let _ = writeln!(s, "eps = {v:?}");
            }
            Scaled::Factor(f) => {
                let _ = writeln!(s, "eps_factor = {f:?}");
            }
        }
        let _ = writeln!(s, "gamma_factor = {:?}\ng = {:?}\n", p.gamma_factor, p.g);
        let _ = writeln!(
            s,
            "[output]\ncsv = {}\nvtk_period = {:?}\nseries_period = {:?}\ncontour_samples = {}\nregion_points = {}\n",
            self.csv, self.vtk_period, self.series_period, self.contour_samples, self.region_points
        );
        if self.kind == ProblemKind::Converge {
            let _ = writeln!(s, "[convergence]\nlevels = {}", list(&self.levels));
            if !self.time_steps.is_empty() {
                let _ = writeln!(s, "time_steps = {}", list(&self.time_steps));
            }
        }
        s
    }
}

const KEYS: &[(&str, &[&str])] = &[
    ("problem", &["kind"]),
    (
        "mesh",
        &["nx", "ny", "x0", "x1", "y0", "y1", "periodic_x", "periodic_y", "bottom", "right", "top", "left"],
    ),
    ("discretization", &["k", "alpha", "quad_volume", "quad_edge"]),
    ("time", &["cfl", "dt", "t_end", "v_floor", "dt_max"]),
    (
        "physics",
        &["rho1", "rho2", "nu1", "nu2", "re", "sigma", "sigma_factor", "g", "eps", "eps_factor", "gamma_factor"],
    ),
    ("output", &["csv", "vtk_period", "series_period", "contour_samples", "region_points"]),
    ("convergence", &["levels", "time_steps"]),
];

struct Entry {
    value: String,
    line: usize,
}

struct Entries(HashMap<String, Entry>);

impl Entries {
    fn take(&mut self, key: &str) -> Option<Entry> {
        self.0.remove(key)
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.0.get(key).map(|e| e.line)
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str, expected: &'static str) -> Result<Option<(T, usize)>> {
        match self.take(key) {
            None => Ok(None),
            Some(e) => e.value.parse::<T>().map(|v| Some((v, e.line))).map_err(|_| ConfigError::Type {
                line: e.line,
                key: key.into(),
                expected,
                value: e.value,
            }),
        }
    }

    fn float(&mut self, key: &str, target: &mut f64) -> Result<()> {
        if let Some((v, _)) = self.parsed::<f64>(key, "a number")? {
            *target = v;
        }
        Ok(())
    }

    fn uint(&mut self, key: &str, target: &mut usize) -> Result<()> {
        if let Some((v, _)) = self.parsed::<usize>(key, "a non-negative integer")? {
            *target = v;
        }
        Ok(())
    }

    fn boolean(&mut self, key: &str, target: &mut bool) -> Result<()> {
        if let Some((v, _)) = self.parsed::<bool>(key, "true or false")? {
            *target = v;
        }
        Ok(())
    }

    fn side(&mut self, key: &str, target: &mut BoundaryCondition) -> Result<()> {
        if let Some(e) = self.take(key) {
            *target = match e.value.as_str() {
                "noslip" | "no-slip" => BoundaryCondition::NoSlip,
                "slip" => BoundaryCondition::Slip,
                "natural" => BoundaryCondition::Natural,
                _ => {
                    return Err(ConfigError::Type {
                        line: e.line,
                        key: key.into(),
                        expected: "noslip, slip or natural",
                        value: e.value,
                    })
                }
            };
        }
        Ok(())
    }

    fn list(&mut self, key: &str, target: &mut Vec<usize>) -> Result<()> {
        if let Some(e) = self.take(key) {
            let parsed: std::result::Result<Vec<usize>, _> = e
                .value
                .split(',')
                .map(|s| s.trim())
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<usize>())
                .collect();
            *target = parsed.map_err(|_| ConfigError::Type {
                line: e.line,
                key: key.into(),
                expected: "a comma-separated list of integers",
                value: e.value.clone(),
            })?;
        }
        Ok(())
    }
}

fn tokenize(text: &str) -> Result<Entries> {
    let mut section: Option<String> = None;
    let mut out: HashMap<String, Entry> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::Syntax {
                    line,
                    msg: format!("malformed section header `{content}`"),
                })?
                .trim();
            if !KEYS.iter().any(|(s, _)| *s == name) {
                return Err(ConfigError::UnknownSection {
                    line,
                    section: name.into(),
                });
            }
            section = Some(name.into());
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            msg: format!("expected `key = value`, got `{content}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        let sec = section.clone().ok_or_else(|| ConfigError::Syntax {
            line,
            msg: format!("key `{key}` outside of a section"),
        })?;
        let known = KEYS.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
        if !known.contains(&key) {
            return Err(ConfigError::UnknownKey {
                line,
                section: sec,
                key: key.into(),
            });
        }
        if value.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                msg: format!("key `{key}` has no value"),
            });
        }
        if out.contains_key(key) {
            return Err(ConfigError::Duplicate { line, key: key.into() });
        }
        out.insert(key.into(), Entry { value: value.into(), line });
    }
    Ok(Entries(out))
}

fn invalid(key: &str, line: Option<usize>, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.into(),
        line,
        msg: msg.into(),
    }
}

/// Parses and validates a configuration file.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut e = tokenize(text)?;
    let lines: HashMap<String, usize> = e.0.iter().map(|(k, v)| (k.clone(), v.line)).collect();
    let line = |k: &str| lines.get(k).copied();
    let kind_entry = e.take("kind").ok_or_else(|| ConfigError::Missing("problem.kind".into()))?;
    let kind = ProblemKind::parse(&kind_entry.value).ok_or_else(|| ConfigError::Type {
        line: kind_entry.line,
        key: "kind".into(),
        expected: "converge, bubble1, bubble2 or rayleigh-taylor",
        value: kind_entry.value.clone(),
    })?;
    let mut c = RunConfig::defaults(kind);

    let m = &mut c.mesh;
    e.uint("nx", &mut m.nx)?;
    e.uint("ny", &mut m.ny)?;
    for (i, key) in ["x0", "x1", "y0", "y1"].iter().enumerate() {
        e.float(key, &mut m.bounds[i])?;
    }
    e.boolean("periodic_x", &mut m.periodic_x)?;
    e.boolean("periodic_y", &mut m.periodic_y)?;
    for (i, key) in ["bottom", "right", "top", "left"].iter().enumerate() {
        e.side(key, &mut m.sides[i])?;
    }

    let k_given = e.line("k").is_some();
    e.uint("k", &mut c.k)?;
    if k_given {
        c.set_degree(c.k);
    }
    e.float("alpha", &mut c.alpha)?;
    e.uint("quad_volume", &mut c.quad_volume)?;
    e.uint("quad_edge", &mut c.quad_edge)?;

    let cfl = e.parsed::<f64>("cfl", "a number")?;
    let dt = e.parsed::<f64>("dt", "a number")?;
    match (cfl, dt) {
        (Some(_), Some((_, l))) => {
            return Err(ConfigError::Conflict {
                line: l.max(line("cfl").unwrap_or(0)),
                msg: "`cfl` and `dt` are mutually exclusive".into(),
            })
        }
        (Some((v, l)), None) | (None, Some((v, l))) if kind == ProblemKind::Converge => {
            let _ = v;
            return Err(invalid(
                if line("cfl") == Some(l) { "cfl" } else { "dt" },
                Some(l),
                "the convergence driver sets dt = h^((k+1)/2)",
            ));
        }
        (Some((v, _)), None) => c.step = Some(StepRule::Cfl(v)),
        (None, Some((v, _))) => c.step = Some(StepRule::Fixed(v)),
        (None, None) => {}
    }
    e.float("t_end", &mut c.t_end)?;
    e.float("v_floor", &mut c.v_floor)?;
    e.float("dt_max", &mut c.dt_max)?;

    let p = &mut c.physics;
    e.float("rho1", &mut p.rho1)?;
    e.float("rho2", &mut p.rho2)?;
    let nu1 = e.parsed::<f64>("nu1", "a number")?;
    let nu2 = e.parsed::<f64>("nu2", "a number")?;
    let re = e.parsed::<f64>("re", "a number")?;
    if let Some((r, l)) = re {
        if nu1.is_some() || nu2.is_some() {
            return Err(ConfigError::Conflict {
                line: l,
                msg: "`re` fixes both viscosities; drop `nu1`/`nu2`".into(),
            });
        }
        p.re = Some(r);
        p.nu1 = 2f64.sqrt() / r;
        p.nu2 = p.nu1;
    } else if nu1.is_some() || nu2.is_some() {
        p.re = None;
        if let Some((v, _)) = nu1 {
            p.nu1 = v;
        }
        if let Some((v, _)) = nu2 {
            p.nu2 = v;
        }
    }
    let pick = |a: Option<(f64, usize)>, b: Option<(f64, usize)>, an: &str, bn: &str| -> Result<Option<Scaled>> {
        match (a, b) {
            (Some(_), Some((_, l))) => Err(ConfigError::Conflict {
                line: l,
                msg: format!("`{an}` and `{bn}` are mutually exclusive"),
            }),
            (Some((v, _)), None) => Ok(Some(Scaled::Absolute(v))),
            (None, Some((v, _))) => Ok(Some(Scaled::Factor(v))),
            (None, None) => Ok(None),
        }
    };
    let sigma = e.parsed::<f64>("sigma", "a number")?;
    let sigma_factor = e.parsed::<f64>("sigma_factor", "a number")?;
    if let Some(s) = pick(sigma, sigma_factor, "sigma", "sigma_factor")? {
        p.sigma = s;
    }
    let eps = e.parsed::<f64>("eps", "a number")?;
    let eps_factor = e.parsed::<f64>("eps_factor", "a number")?;
    if let Some(s) = pick(eps, eps_factor, "eps", "eps_factor")? {
        p.eps = s;
    }
    e.float("gamma_factor", &mut p.gamma_factor)?;
    e.float("g", &mut p.g)?;

    if let Some(v) = e.take("csv") {
        c.csv = v.value;
    }
    e.float("vtk_period", &mut c.vtk_period)?;
    e.float("series_period", &mut c.series_period)?;
    e.uint("contour_samples", &mut c.contour_samples)?;
    e.uint("region_points", &mut c.region_points)?;

    let lv = line("levels");
    let ts = line("time_steps");
    e.list("levels", &mut c.levels)?;
    e.list("time_steps", &mut c.time_steps)?;
    if kind != ProblemKind::Converge && (lv.is_some() || ts.is_some()) {
        return Err(invalid(
            "convergence",
            lv.or(ts),
            "only used by the convergence driver",
        ));
    }
    debug_assert!(e.0.is_empty());
    validate(&c, &line)?;
    Ok(c)
}

fn validate(c: &RunConfig, line: &dyn Fn(&str) -> Option<usize>) -> Result<()> {
    let positive = |key: &str, v: f64| -> Result<()> {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(invalid(key, line(key), format!("must be positive, got {v}")))
        }
    };
    let m = &c.mesh;
    if m.nx == 0 || m.ny == 0 {
        let key = if m.nx == 0 { "nx" } else { "ny" };
        return Err(invalid(key, line(key), "must be at least 1"));
    }
    if !(m.bounds[1] > m.bounds[0]) || !(m.bounds[3] > m.bounds[2]) {
        return Err(invalid("x0", line("x0").or(line("y0")), "bounds must satisfy x0 < x1 and y0 < y1"));
    }
    if c.k == 0 {
        return Err(invalid("k", line("k"), "polynomial degree must be at least 1"));
    }
    positive("alpha", c.alpha)?;
    if c.quad_volume < c.k + 1 || c.quad_edge < c.k + 1 {
        let key = if c.quad_volume < c.k + 1 { "quad_volume" } else { "quad_edge" };
        return Err(invalid(key, line(key), format!("needs at least k+1 = {} points", c.k + 1)));
    }
    match c.step {
        Some(StepRule::Cfl(v)) => positive("cfl", v)?,
        Some(StepRule::Fixed(v)) => positive("dt", v)?,
        None if c.kind != ProblemKind::Converge => {
            return Err(ConfigError::Missing("time.cfl or time.dt".into()));
        }
        None => {}
    }
    positive("t_end", c.t_end)?;
    positive("v_floor", c.v_floor)?;
    positive("dt_max", c.dt_max)?;
    let p = &c.physics;
    positive("rho1", p.rho1)?;
    positive("rho2", p.rho2)?;
    positive("nu1", p.nu1)?;
    positive("nu2", p.nu2)?;
    if let Some(re) = p.re {
        positive("re", re)?;
    }
    let (sk, ek) = (
        if matches!(p.sigma, Scaled::Absolute(_)) { "sigma" } else { "sigma_factor" },
        if matches!(p.eps, Scaled::Absolute(_)) { "eps" } else { "eps_factor" },
    );
    if !(p.sigma.value() >= 0.0) || !p.sigma.value().is_finite() {
        return Err(invalid(sk, line(sk), "must be non-negative"));
    }
    positive(ek, p.eps.value())?;
    positive("gamma_factor", p.gamma_factor)?;
    if !p.g.is_finite() {
        return Err(invalid("g", line("g"), "must be finite"));
    }
    if !(c.vtk_period >= 0.0) || !(c.series_period >= 0.0) {
        let key = if c.vtk_period >= 0.0 { "series_period" } else { "vtk_period" };
        return Err(invalid(key, line(key), "must be non-negative"));
    }
    if c.contour_samples < 2 {
        return Err(invalid("contour_samples", line("contour_samples"), "needs at least 2 samples per element"));
    }
    if c.region_points == 0 {
        return Err(invalid("region_points", line("region_points"), "must be at least 1"));
    }
    if c.csv.trim().is_empty() {
        return Err(invalid("csv", line("csv"), "must not be empty"));
    }
    if c.kind == ProblemKind::Converge {
        if c.levels.is_empty() || c.levels.contains(&0) {
            return Err(invalid("levels", line("levels"), "needs positive mesh sizes 1/h"));
        }
        if !(m.periodic_x && m.periodic_y) {
            return Err(invalid("periodic_x", line("periodic_x").or(line("periodic_y")), "the manufactured solution needs a periodic domain"));
        }
        if c.time_steps.contains(&0) {
            return Err(invalid("time_steps", line("time_steps"), "step counts must be positive"));
        }
    }
    Ok(())
}
