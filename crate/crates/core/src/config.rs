//! Run configuration: JSON schema, presets, defaults and validation.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::diagnostics::{self, GrimReaper, StudySettings};
use crate::discretization::{AngleData, Grid, PhiSpec, MAX_STEEPNESS};
use crate::error::{McfError, Result};
use crate::flow::{Scheme, StepPolicy, Stop, TimeStep, MAX_STEPS};
use crate::geometry::{make_geometry, Geometry, GeometryConfig, GeometryKind};
use crate::soliton::NewtonPolicy;

fn config_error(path: &str, message: impl fmt::Display) -> McfError {
    McfError::Config {
        path: path.into(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AngleConfig {
    pub phi: PhiSpec,
}

/// `"auto"` or a positive number.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum DtSetting {
    #[default]
    Auto,
    Fixed(f64),
}

impl Serialize for DtSetting {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            DtSetting::Auto => s.serialize_str("auto"),
            DtSetting::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for DtSetting {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Value(f64),
        }
        match Raw::deserialize(d)? {
            Raw::Text(t) if t == "auto" => Ok(DtSetting::Auto),
            Raw::Text(t) => Err(de::Error::custom(format!("expected \"auto\" or a number, got \"{t}\""))),
            Raw::Value(v) => Ok(DtSetting::Fixed(v)),
        }
    }
}

impl FromStr for DtSetting {
    type Err = McfError;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(DtSetting::Auto);
        }
        s.parse()
            .map(DtSetting::Fixed)
            .map_err(|_| McfError::InvalidParameter(format!("expected `auto` or a number, got `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EpsSchedule {
    pub start: f64,
    pub min: f64,
    pub ratio: f64,
}

impl Default for EpsSchedule {
    fn default() -> Self {
        let p = NewtonPolicy::default();
        EpsSchedule {
            start: p.eps_start,
            min: p.eps_min,
            ratio: p.eps_ratio,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    #[serde(rename = "N_r")]
    pub n_r: usize,
    /// Angular nodes; only used on polar disks.
    #[serde(rename = "N_theta")]
    pub n_theta: usize,
    pub scheme: Scheme,
    pub dt: DtSetting,
    pub safety: f64,
    /// Newton residual tolerance.
    pub tol: f64,
    pub max_iter: usize,
    pub eps_schedule: EpsSchedule,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let p = NewtonPolicy::default();
        SolverConfig {
            n_r: 200,
            n_theta: 32,
            scheme: Scheme::SemiImplicit,
            dt: DtSetting::Auto,
            safety: StepPolicy::default().safety,
            tol: p.tol,
            max_iter: p.max_iter,
            eps_schedule: EpsSchedule::default(),
        }
    }
}

/// Initial datum of a flow.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum InitialCondition {
    #[default]
    Zero,
    /// The computed soliton profile.
    Soliton,
    Constant(f64),
    /// `amp cos(pi s)` in the normalised coordinate `s`.
    Cosine(f64),
    /// Smooth random data drawn from the run seed.
    Random,
}

impl fmt::Display for InitialCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialCondition::Zero => write!(f, "zero"),
            InitialCondition::Soliton => write!(f, "soliton"),
            InitialCondition::Constant(c) => write!(f, "const:{c}"),
            InitialCondition::Cosine(a) => write!(f, "cosine:{a}"),
            InitialCondition::Random => write!(f, "random"),
        }
    }
}

impl FromStr for InitialCondition {
    type Err = McfError;

    fn from_str(s: &str) -> Result<Self> {
        let num = |t: &str| -> Result<f64> {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| McfError::InvalidParameter(format!("not a finite number: `{t}`")))
        };
        match s {
            "zero" => Ok(InitialCondition::Zero),
            "soliton" => Ok(InitialCondition::Soliton),
            "random" => Ok(InitialCondition::Random),
            _ => {
                if let Some(rest) = s.strip_prefix("const:") {
                    Ok(InitialCondition::Constant(num(rest)?))
                } else if let Some(rest) = s.strip_prefix("cosine:") {
                    Ok(InitialCondition::Cosine(num(rest)?))
                } else {
                    Err(McfError::InvalidParameter(format!(
                        "expected `zero`, `soliton`, `random`, `const:<c>` or `cosine:<amp>`, got `{s}`"
                    )))
                }
            }
        }
    }
}

impl Serialize for InitialCondition {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for InitialCondition {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowConfig {
    pub u0: InitialCondition,
    /// Without an end time the flow runs until the speed is stationary.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    pub speed_tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<f64>,
    pub max_steps: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            u0: InitialCondition::Zero,
            t_end: None,
            speed_tol: 1e-6,
            snapshot_every: None,
            max_steps: MAX_STEPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsConfig {
    /// Tolerance of the convergence verdicts.
    pub tol: f64,
    /// Random pairs flowed side by side by `verify`.
    pub contraction_pairs: usize,
    pub contraction_t_end: f64,
    /// Grid levels of a refinement study.
    pub levels: usize,
    pub min_order: f64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            tol: 1e-3,
            contraction_pairs: 2,
            contraction_t_end: 5.0,
            levels: 3,
            min_order: 1.9,
        }
    }
}

/// Input document: like [`RunConfig`] but geometry and angle may come from a
/// preset.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    preset: Option<String>,
    #[serde(default)]
    geometry: Option<GeometryConfig>,
    #[serde(default)]
    angle: Option<AngleConfig>,
    #[serde(default)]
    solver: SolverConfig,
    #[serde(default)]
    flow: FlowConfig,
    #[serde(default)]
    diagnostics: DiagnosticsConfig,
    #[serde(default)]
    seed: u64,
}

/// A fully resolved run configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    pub angle: AngleConfig,
    pub solver: SolverConfig,
    pub flow: FlowConfig,
    pub diagnostics: DiagnosticsConfig,
    pub seed: u64,
}

impl<'de> Deserialize<'de> for RunConfig {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawConfig::deserialize(d)?;
        resolve(raw).map_err(de::Error::custom)
    }
}

/// Names accepted by `"preset"`.
pub fn preset_names() -> Vec<String> {
    diagnostics::catalog().into_iter().map(|c| c.name).collect()
}

fn resolve(raw: RawConfig) -> Result<RunConfig> {
    let preset = match &raw.preset {
        None => None,
        Some(name) => Some(
            diagnostics::catalog()
                .into_iter()
                .find(|c| &c.name == name)
                .ok_or_else(|| config_error("preset", format!("unknown preset `{name}`; known: {}", preset_names().join(", "))))?,
        ),
    };
    let geometry = raw
        .geometry
        .or_else(|| preset.as_ref().map(|c| c.geometry.clone()))
        .ok_or_else(|| config_error("geometry", "missing (give a geometry block or a preset)"))?;
    let angle = raw
        .angle
        .or_else(|| preset.as_ref().map(|c| AngleConfig { phi: c.phi.clone() }))
        .ok_or_else(|| config_error("angle", "missing (give an angle block or a preset)"))?;
    Ok(RunConfig {
        geometry,
        angle,
        solver: raw.solver,
        flow: raw.flow,
        diagnostics: raw.diagnostics,
        seed: raw.seed,
    })
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_error(path, format!("must be a positive number, got {v}")))
    }
}

impl RunConfig {
    /// Parses and validates a JSON document.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_error(&path, e.into_inner())
        })?;
        let config = resolve(raw)?;
        config.validate()?;
        Ok(config)
    }

    /// Checks every block; errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        let geom = make_geometry(&self.geometry).map_err(|e| config_error("geometry", e))?;
        let phi = &self.angle.phi;
        let sup = phi.sup_norm();
        if sup >= MAX_STEEPNESS {
            return Err(config_error(
                "angle.phi",
                format!("contact angle too steep: |phi| = {sup} must stay below {MAX_STEEPNESS}"),
            ));
        }
        if matches!(phi, PhiSpec::Fourier(_)) && geom.kind() != GeometryKind::PolarDisk {
            return Err(config_error("angle.phi", "Fourier data require a polar_disk geometry"));
        }
        let s = &self.solver;
        positive("solver.tol", s.tol)?;
        positive("solver.safety", s.safety)?;
        if s.safety > 1.0 {
            return Err(config_error("solver.safety", format!("must not exceed 1, got {}", s.safety)));
        }
        if let DtSetting::Fixed(dt) = s.dt {
            positive("solver.dt", dt)?;
        }
        if s.max_iter == 0 {
            return Err(config_error("solver.max_iter", "must be at least 1"));
        }
        self.newton_policy()
            .schedule()
            .map_err(|e| config_error("solver.eps_schedule", e))?;
        self.grid_for(&geom).map_err(|e| config_error("solver", e))?;
        let f = &self.flow;
        if let Some(t) = f.t_end {
            positive("flow.t_end", t)?;
        }
        positive("flow.speed_tol", f.speed_tol)?;
        if let Some(e) = f.snapshot_every {
            positive("flow.snapshot_every", e)?;
        }
        if f.max_steps == 0 {
            return Err(config_error("flow.max_steps", "must be at least 1"));
        }
        let d = &self.diagnostics;
        positive("diagnostics.tol", d.tol)?;
        positive("diagnostics.contraction_t_end", d.contraction_t_end)?;
        positive("diagnostics.min_order", d.min_order)?;
        if d.levels < 3 {
            return Err(config_error("diagnostics.levels", format!("need at least 3 levels, got {}", d.levels)));
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<Geometry> {
        make_geometry(&self.geometry)
    }

    fn grid_for(&self, geom: &Geometry) -> Result<Grid> {
        let nt = if geom.kind() == GeometryKind::PolarDisk { self.solver.n_theta } else { 1 };
        Grid::new(geom, self.solver.n_r, nt)
    }

    pub fn grid(&self) -> Result<Grid> {
        self.grid_for(&self.geometry()?)
    }

    pub fn setup(&self) -> Result<(Grid, AngleData)> {
        let grid = self.grid()?;
        let angle = AngleData::new(&grid, &self.angle.phi)?;
        Ok((grid, angle))
    }

    pub fn newton_policy(&self) -> NewtonPolicy {
        let s = &self.solver;
        NewtonPolicy {
            tol: s.tol,
            max_iter: s.max_iter,
            eps_start: s.eps_schedule.start,
            eps_min: s.eps_schedule.min,
            eps_ratio: s.eps_schedule.ratio,
            ..NewtonPolicy::default()
        }
    }

    pub fn step_policy(&self) -> StepPolicy {
        StepPolicy {
            scheme: self.solver.scheme,
            dt: match self.solver.dt {
                DtSetting::Auto => TimeStep::Auto,
                DtSetting::Fixed(v) => TimeStep::Fixed(v),
            },
            safety: self.solver.safety,
        }
    }

    pub fn stop(&self) -> Stop {
        let f = &self.flow;
        Stop {
            t_end: f.t_end,
            speed_tol: if f.t_end.is_some() { None } else { Some(f.speed_tol) },
            max_steps: f.max_steps,
        }
    }

    pub fn study_settings(&self) -> StudySettings {
        StudySettings {
            newton: self.newton_policy(),
            step: self.step_policy(),
            speed_tol: self.flow.speed_tol,
            ..StudySettings::default()
        }
    }

    /// The closed-form oracle, when the configuration is the grim reaper.
    pub fn oracle(&self) -> Option<GrimReaper> {
        let g = GrimReaper::default();
        let is_reaper = self.geometry.kind == GeometryKind::Interval1D
            && self.geometry.a == Some(-1.0)
            && self.geometry.b == Some(1.0)
            && self.angle.phi == PhiSpec::Constant(g.phi());
        is_reaper.then_some(g)
    }

    /// The configuration as a named experiment for refinement studies.
    pub fn case(&self, name: &str) -> diagnostics::Case {
        diagnostics::Case {
            name: name.into(),
            geometry: self.geometry.clone(),
            phi: self.angle.phi.clone(),
            n_r: self.solver.n_r,
            n_theta: self.solver.n_theta,
            oracle: self.oracle(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// Reads and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| McfError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    RunConfig::from_json_str(&text)
}
