//! Structured text configuration: an INI-style `key = value` format with
//! four sections and a canonical serialization (stable section order, stable
//! key order, shortest-round-trip float text), so
//! `serialize(parse(serialize(c)))` is byte-identical to `serialize(c)`.
//!
//! Unset keys default to the values of the preset named by the top-level
//! `experiment` key (preset 4 when absent). See the README for the full
//! format reference.

use quadpend::dynamics::StateError;
use quadpend::geom::tangent_project;
use quadpend::integrator::IntegratorConfig;
use quadpend::{
    ControllerGains, Mat3, PhysicalParams, Rotation, SystemState, UnitVec3, Vec3,
};

use crate::presets::preset;

/// A complete, possibly-not-yet-validated run description.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// Preset supplying defaults for every field (1–5).
    pub experiment: u8,
    // [params]
    pub quad_mass: f64,
    pub pendulum_mass: f64,
    pub pendulum_length: f64,
    pub gravity: f64,
    pub arm_length: f64,
    pub torque_coeff: f64,
    pub inertia: Mat3,
    // [gains]
    pub k_d: f64,
    pub k1: f64,
    pub k2: f64,
    // [initial]
    pub x: Vec3,
    pub xdot: Vec3,
    pub attitude: Mat3,
    pub omega: Vec3,
    pub y: Vec3,
    pub ydot: Vec3,
    // [integrator]
    pub dt: f64,
    pub t_end: f64,
    pub projection: bool,
    pub drift_report_every: u32,
}

/// Everything a run needs, after validation.
#[derive(Clone, Debug)]
pub struct ResolvedConfig {
    pub state: SystemState,
    pub gains: ControllerGains,
    pub params: PhysicalParams,
    pub integrator: IntegratorConfig,
    /// `|‖y0‖ - 1|` absorbed while normalizing the configured direction;
    /// callers warn when this is large enough to matter.
    pub y_normalization: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConfigError {
    /// The file text could not be understood. Carries the 1-based line.
    Parse { line: usize, message: String },
    /// A field failed validation. Carries the offending key.
    Validation { key: String, message: String },
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Parse { line, message } => write!(f, "line {line}: {message}"),
            ConfigError::Validation { key, message } => write!(f, "{key}: {message}"),
        }
    }
}

impl std::error::Error for ConfigError {}

fn validation(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        key: key.into(),
        message: message.into(),
    }
}

impl RunConfig {
    /// Expands preset `id` into a full configuration.
    pub fn from_preset(id: u8) -> Option<Self> {
        let p = preset(id)?;
        Some(RunConfig {
            experiment: id,
            quad_mass: p.params.quad_mass,
            pendulum_mass: p.params.pendulum_mass,
            pendulum_length: p.params.pendulum_length,
            gravity: p.params.gravity,
            arm_length: p.params.arm_length,
            torque_coeff: p.params.torque_coeff,
            inertia: p.params.inertia,
            k_d: p.gains.k_d,
            k1: p.gains.k1,
            k2: p.gains.k2,
            x: p.x0,
            xdot: p.xdot0,
            attitude: p.r0,
            omega: p.omega0,
            y: p.y0,
            ydot: p.ydot0,
            dt: 1e-3,
            t_end: 6.5,
            projection: true,
            drift_report_every: 100,
        })
    }

    /// Parses the canonical text format. Two passes: the `experiment` key
    /// picks the defaults first, then every other key overrides.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut experiment = 4u8;
        for (idx, raw) in text.lines().enumerate() {
            let line = strip_comment(raw).trim();
            if let Some(rest) = line.strip_prefix("experiment") {
                let rest = rest.trim_start();
                if let Some(value) = rest.strip_prefix('=') {
                    experiment = value
                        .trim()
                        .parse::<u8>()
                        .map_err(|_| ConfigError::Parse {
                            line: idx + 1,
                            message: format!("experiment must be an integer, got `{}`", value.trim()),
                        })?;
                }
            }
        }
        let mut cfg = RunConfig::from_preset(experiment).ok_or_else(|| ConfigError::Parse {
            line: 1,
            message: format!("experiment must be 1-5, got {experiment}"),
        })?;

        let mut section = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = strip_comment(raw).trim().to_string();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| ConfigError::Parse {
                    line: line_no,
                    message: "unterminated section header".into(),
                })?;
                section = name.trim().to_string();
                if !matches!(section.as_str(), "params" | "gains" | "initial" | "integrator") {
                    return Err(ConfigError::Parse {
                        line: line_no,
                        message: format!("unknown section [{section}]"),
                    });
                }
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
                line: line_no,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            cfg.apply(&section, key, value, line_no)?;
        }
        Ok(cfg)
    }

    fn apply(&mut self, section: &str, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
        let bad_number = |what: &str| ConfigError::Parse {
            line,
            message: format!("{what}: could not parse `{value}`"),
        };
        let scalar = || value.parse::<f64>().map_err(|_| bad_number("number"));
        let vector = || parse_vec3(value).ok_or_else(|| bad_number("3-vector"));
        let matrix = || parse_mat3(value).ok_or_else(|| bad_number("matrix (3 diagonal or 9 row-major values)"));
        match (section, key) {
            ("", "experiment") => {} // handled by the first pass
            ("params", "quad_mass") => self.quad_mass = scalar()?,
            ("params", "pendulum_mass") => self.pendulum_mass = scalar()?,
            ("params", "pendulum_length") => self.pendulum_length = scalar()?,
            ("params", "gravity") => self.gravity = scalar()?,
            ("params", "arm_length") => self.arm_length = scalar()?,
            ("params", "torque_coeff") => self.torque_coeff = scalar()?,
            ("params", "inertia") => self.inertia = matrix()?,
            ("gains", "k_d") => self.k_d = scalar()?,
            ("gains", "k1") => self.k1 = scalar()?,
            ("gains", "k2") => self.k2 = scalar()?,
            ("initial", "x") => self.x = vector()?,
            ("initial", "xdot") => self.xdot = vector()?,
            ("initial", "attitude") => self.attitude = matrix()?,
            ("initial", "omega") => self.omega = vector()?,
            ("initial", "y") => self.y = vector()?,
            ("initial", "ydot") => self.ydot = vector()?,
            ("integrator", "dt") => self.dt = scalar()?,
            ("integrator", "t_end") => self.t_end = scalar()?,
            ("integrator", "projection") => {
                self.projection = match value {
                    "on" => true,
                    "off" => false,
                    _ => {
                        return Err(ConfigError::Parse {
                            line,
                            message: format!("projection must be `on` or `off`, got `{value}`"),
                        })
                    }
                }
            }
            ("integrator", "drift_report_every") => {
                self.drift_report_every = value.parse::<u32>().map_err(|_| bad_number("integer"))?
            }
            _ => {
                return Err(ConfigError::Parse {
                    line,
                    message: if section.is_empty() {
                        format!("unknown key `{key}`")
                    } else {
                        format!("unknown key `{key}` in section [{section}]")
                    },
                })
            }
        }
        Ok(())
    }

    /// Canonical text form. Stable ordering, shortest-round-trip floats.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        out.push_str("# quadpend run configuration\n");
        out.push_str(&format!("experiment = {}\n", self.experiment));
        out.push_str("\n[params]\n");
        out.push_str(&format!("quad_mass = {}\n", self.quad_mass));
        out.push_str(&format!("pendulum_mass = {}\n", self.pendulum_mass));
        out.push_str(&format!("pendulum_length = {}\n", self.pendulum_length));
        out.push_str(&format!("gravity = {}\n", self.gravity));
        out.push_str(&format!("arm_length = {}\n", self.arm_length));
        out.push_str(&format!("torque_coeff = {}\n", self.torque_coeff));
        out.push_str(&format!("inertia = {}\n", fmt_mat3(&self.inertia)));
        out.push_str("\n[gains]\n");
        out.push_str(&format!("k_d = {}\n", self.k_d));
        out.push_str(&format!("k1 = {}\n", self.k1));
        out.push_str(&format!("k2 = {}\n", self.k2));
        out.push_str("\n[initial]\n");
        out.push_str(&format!("x = {}\n", fmt_vec3(&self.x)));
        out.push_str(&format!("xdot = {}\n", fmt_vec3(&self.xdot)));
        out.push_str(&format!("attitude = {}\n", fmt_mat3(&self.attitude)));
        out.push_str(&format!("omega = {}\n", fmt_vec3(&self.omega)));
        out.push_str(&format!("y = {}\n", fmt_vec3(&self.y)));
        out.push_str(&format!("ydot = {}\n", fmt_vec3(&self.ydot)));
        out.push_str("\n[integrator]\n");
        out.push_str(&format!("dt = {}\n", self.dt));
        out.push_str(&format!("t_end = {}\n", self.t_end));
        out.push_str(&format!(
            "projection = {}\n",
            if self.projection { "on" } else { "off" }
        ));
        out.push_str(&format!("drift_report_every = {}\n", self.drift_report_every));
        out
    }

    /// Validates every field and assembles the simulator inputs.
    pub fn resolve(&self) -> Result<ResolvedConfig, ConfigError> {
        let params = PhysicalParams::new(
            self.quad_mass,
            self.pendulum_mass,
            self.pendulum_length,
            self.inertia,
            self.gravity,
            self.arm_length,
            self.torque_coeff,
        )
        .map_err(|e| {
            let key = match e {
                quadpend::dynamics::ParamError::NonPositive { name, .. } => {
                    format!("params.{name}")
                }
                _ => "params.inertia".into(),
            };
            validation(&key, e.to_string())
        })?;
        let gains = ControllerGains::new(self.k_d, self.k1, self.k2).map_err(|e| {
            let quadpend::controller::GainError::NonPositive { name, .. } = e;
            validation(&format!("gains.{name}"), e.to_string())
        })?;
        let integrator = IntegratorConfig::new(self.dt, self.t_end)
            .map_err(|e| {
                let key = match e {
                    quadpend::integrator::ConfigError::StepOutOfRange { .. } => "integrator.dt",
                    quadpend::integrator::ConfigError::HorizonNotPositive { .. } => {
                        "integrator.t_end"
                    }
                };
                validation(key, e.to_string())
            })
            .map(|mut cfg| {
                cfg.projection = self.projection;
                cfg.drift_report_every = self.drift_report_every;
                cfg
            })?;

        let y_norm = self.y.norm();
        if !y_norm.is_finite() || (y_norm - 1.0).abs() > 1e-3 {
            return Err(validation(
                "initial.y",
                format!("must be a unit vector to within 1e-3, got norm {y_norm}"),
            ));
        }
        let y = UnitVec3::normalize(self.y)
            .map_err(|e| validation("initial.y", e.to_string()))?;
        let ydot = tangent_project(&y, self.ydot);
        let rotation = Rotation::new(self.attitude)
            .map_err(|e| validation("initial.attitude", e.to_string()))?;
        let state = SystemState::new(self.x, self.xdot, rotation, self.omega, y, ydot)
            .map_err(|e: StateError| validation("initial", e.to_string()))?;
        Ok(ResolvedConfig {
            state,
            gains,
            params,
            integrator,
            y_normalization: (y_norm - 1.0).abs(),
        })
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn parse_vec3(s: &str) -> Option<Vec3> {
    let parts: Vec<f64> = s
        .split_whitespace()
        .map(|p| p.parse::<f64>())
        .collect::<Result<_, _>>()
        .ok()?;
    if parts.len() != 3 {
        return None;
    }
    Some(Vec3::new(parts[0], parts[1], parts[2]))
}

/// Accepts 3 values (a diagonal) or 9 row-major values; serialization always
/// writes 9.
fn parse_mat3(s: &str) -> Option<Mat3> {
    let parts: Vec<f64> = s
        .split_whitespace()
        .map(|p| p.parse::<f64>())
        .collect::<Result<_, _>>()
        .ok()?;
    match parts.len() {
        3 => Some(Mat3::diag(parts[0], parts[1], parts[2])),
        9 => Some(Mat3 {
            m: [
                [parts[0], parts[1], parts[2]],
                [parts[3], parts[4], parts[5]],
                [parts[6], parts[7], parts[8]],
            ],
        }),
        _ => None,
    }
}

fn fmt_vec3(v: &Vec3) -> String {
    format!("{} {} {}", v.x, v.y, v.z)
}

fn fmt_mat3(m: &Mat3) -> String {
    let r = &m.m;
    format!(
        "{} {} {} {} {} {} {} {} {}",
        r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2]
    )
}
