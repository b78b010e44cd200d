//! Scenario documents.
//!
//! A scenario is a flat key-value document (TOML syntax, no tables) or the
//! equivalent flat JSON object. Recognized keys:
//!
//! | key | type | default | notes |
//! |-----|------|---------|-------|
//! | `name` | string | `"unnamed"` | |
//! | `controller` | `free`, `tool_regulator`, `normal_only`, `constrained` | required | |
//! | `initial` | `[θ₁, θ₂, θ̇₁, θ̇₂]` | `[0, 0, 0, 0]` | rad, rad/s |
//! | `project_initial` | bool | `false` | Newton-project `initial` onto the constraint |
//! | `x_d` | `[x, y]` | | tool_regulator, constrained only |
//! | `k1`, `k` | float | | tool_regulator, constrained only |
//! | `eps1` | float | `1e-28` | normal_only, constrained only |
//! | `eps2` | float | `1e-28` | constrained only |
//! | `constraint` | `ellipse` | | normal_only, constrained only |
//! | `ellipse_a`, `ellipse_b` | float | | semi-axes along x and y (m) |
//! | `ellipse_center` | `[x, y]` | `[0, 0]` | |
//! | `m1`, `m2`, `l1`, `l2`, `j1`, `j2` | float | uniform 1 kg, 0.4 m rods | |
//! | `potential` | `none`, `gravity` | `none` | gravity only with free/tool_regulator |
//! | `g0` | float | `9.81` | gravity only |
//! | `dt`, `duration` | float | `1e-3`, `10` | s |
//! | `stride` | integer | `10` | exported samples every `stride` steps |
//! | `settle_tol` | float | `1e-3` | m |
//! | `max_final_tool_error`, `max_final_speed`, `max_psi` | float | unset | run contract |

use serde::{Deserialize, Serialize};

use crate::control::{ConstraintSpec, Gains, DEFAULT_EPS};
use crate::dynamics::{JointState, PotentialSpec};
use crate::geometry::{ChartPoint, RobotParams, TangentVector};
use crate::kinematics::ToolPoint;
use crate::{Error, Result};

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_DURATION: f64 = 10.0;
pub const DEFAULT_STRIDE: usize = 10;
pub const DEFAULT_SETTLE_TOL: f64 = 1e-3;
pub const DEFAULT_G0: f64 = 9.81;

const BUILTINS: &[(&str, &str)] = &[
    (
        "paper-sim-1",
        include_str!("../../scenarios/paper-sim-1.toml"),
    ),
    (
        "paper-sim-2",
        include_str!("../../scenarios/paper-sim-2.toml"),
    ),
    (
        "paper-constrained",
        include_str!("../../scenarios/paper-constrained.toml"),
    ),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    Free,
    ToolRegulator,
    NormalOnly,
    Constrained,
}

/// Controller choice together with the fields that controller needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ControllerSpec {
    Free,
    ToolRegulator {
        x_d: ToolPoint,
        gains: Gains,
    },
    NormalOnly {
        constraint: ConstraintSpec,
        eps1: f64,
    },
    Constrained {
        x_d: ToolPoint,
        gains: Gains,
        constraint: ConstraintSpec,
    },
}

impl ControllerSpec {
    pub fn kind(&self) -> ControllerKind {
        match self {
            ControllerSpec::Free => ControllerKind::Free,
            ControllerSpec::ToolRegulator { .. } => ControllerKind::ToolRegulator,
            ControllerSpec::NormalOnly { .. } => ControllerKind::NormalOnly,
            ControllerSpec::Constrained { .. } => ControllerKind::Constrained,
        }
    }

    pub fn x_d(&self) -> Option<ToolPoint> {
        match *self {
            ControllerSpec::ToolRegulator { x_d, .. } | ControllerSpec::Constrained { x_d, .. } => {
                Some(x_d)
            }
            _ => None,
        }
    }

    pub fn constraint(&self) -> Option<ConstraintSpec> {
        match *self {
            ControllerSpec::NormalOnly { constraint, .. }
            | ControllerSpec::Constrained { constraint, .. } => Some(constraint),
            _ => None,
        }
    }

    pub fn gains(&self) -> Option<Gains> {
        match *self {
            ControllerSpec::ToolRegulator { gains, .. }
            | ControllerSpec::Constrained { gains, .. } => Some(gains),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InitialState {
    Exact(JointState),
    /// Projected onto the constraint with `init_on_constraint` before the run.
    Projected(JointState),
}

impl InitialState {
    pub fn guess(&self) -> JointState {
        match *self {
            InitialState::Exact(s) | InitialState::Projected(s) => s,
        }
    }
}

/// Pass/fail thresholds recorded with the scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contract {
    pub settle_tol: f64,
    pub max_final_tool_error: Option<f64>,
    pub max_final_speed: Option<f64>,
    pub max_psi: Option<f64>,
}

impl Default for Contract {
    fn default() -> Self {
        Contract {
            settle_tol: DEFAULT_SETTLE_TOL,
            max_final_tool_error: None,
            max_final_speed: None,
            max_psi: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub params: RobotParams,
    pub initial: InitialState,
    pub controller: ControllerSpec,
    pub potential: PotentialSpec,
    pub dt: f64,
    pub duration: f64,
    pub stride: usize,
    pub contract: Contract,
}

impl Scenario {
    /// A free-motion scenario with every default applied.
    pub fn free(initial: JointState) -> Self {
        Scenario {
            name: "free".into(),
            params: RobotParams::default(),
            initial: InitialState::Exact(initial),
            controller: ControllerSpec::Free,
            potential: PotentialSpec::None,
            dt: DEFAULT_DT,
            duration: DEFAULT_DURATION,
            stride: DEFAULT_STRIDE,
            contract: Contract::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate().map_err(|e| match e {
            Error::InvalidParams(f) => Error::validation(f, "must be strictly positive and finite"),
            other => other,
        })?;
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::validation("dt", "must be > 0"));
        }
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            return Err(Error::validation("duration", "must be >= 0"));
        }
        if self.stride < 1 {
            return Err(Error::validation("stride", "must be >= 1"));
        }
        let guess = self.initial.guess();
        if !guess.is_finite() {
            return Err(Error::validation("initial", "must be finite"));
        }
        let constraint = self.controller.constraint();
        if matches!(self.initial, InitialState::Projected(_)) && constraint.is_none() {
            return Err(Error::validation(
                "project_initial",
                "requires a constraint",
            ));
        }
        match &self.controller {
            ControllerSpec::Free => {}
            ControllerSpec::ToolRegulator { x_d, gains } => {
                check_target(x_d)?;
                gains.validate()?;
            }
            ControllerSpec::NormalOnly { constraint, eps1 } => {
                constraint.validate()?;
                if !(eps1.is_finite() && *eps1 >= 0.0) {
                    return Err(Error::validation("eps1", "must be >= 0"));
                }
            }
            ControllerSpec::Constrained {
                x_d,
                gains,
                constraint,
            } => {
                check_target(x_d)?;
                gains.validate()?;
                constraint.validate()?;
            }
        }
        if let PotentialSpec::Gravity { g0 } = self.potential {
            if !g0.is_finite() {
                return Err(Error::validation("g0", "must be finite"));
            }
            if constraint.is_some() {
                return Err(Error::validation(
                    "potential",
                    "constrained controllers assume U = 0",
                ));
            }
        }
        let c = &self.contract;
        for (field, value) in [
            ("settle_tol", Some(c.settle_tol)),
            ("max_final_tool_error", c.max_final_tool_error),
            ("max_final_speed", c.max_final_speed),
            ("max_psi", c.max_psi),
        ] {
            if let Some(v) = value {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::validation(field, "must be > 0"));
                }
            }
        }
        if c.max_psi.is_some() && constraint.is_none() {
            return Err(Error::validation("max_psi", "requires a constraint"));
        }
        if c.max_final_tool_error.is_some() && self.controller.x_d().is_none() {
            return Err(Error::validation("max_final_tool_error", "requires x_d"));
        }
        Ok(())
    }
}

fn check_target(x_d: &ToolPoint) -> Result<()> {
    if x_d.is_finite() {
        Ok(())
    } else {
        Err(Error::validation("x_d", "must be finite"))
    }
}

fn unused(key: &str, present: bool) -> Result<()> {
    if present {
        Err(Error::validation(key, "not used by this controller"))
    } else {
        Ok(())
    }
}

fn required<T>(key: &str, value: Option<T>) -> Result<T> {
    value.ok_or_else(|| Error::validation(key, "required by this controller"))
}

/// Raw document as written by users; every key optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    name: Option<String>,
    controller: Option<ControllerKind>,
    initial: Option<[f64; 4]>,
    project_initial: Option<bool>,
    x_d: Option<[f64; 2]>,
    k1: Option<f64>,
    k: Option<f64>,
    eps1: Option<f64>,
    eps2: Option<f64>,
    constraint: Option<ConstraintKind>,
    ellipse_a: Option<f64>,
    ellipse_b: Option<f64>,
    ellipse_center: Option<[f64; 2]>,
    m1: Option<f64>,
    m2: Option<f64>,
    l1: Option<f64>,
    l2: Option<f64>,
    j1: Option<f64>,
    j2: Option<f64>,
    potential: Option<PotentialKind>,
    g0: Option<f64>,
    dt: Option<f64>,
    duration: Option<f64>,
    stride: Option<i64>,
    settle_tol: Option<f64>,
    max_final_tool_error: Option<f64>,
    max_final_speed: Option<f64>,
    max_psi: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ConstraintKind {
    Ellipse,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum PotentialKind {
    None,
    Gravity,
}

fn parse_doc(text: &str) -> Result<ScenarioDoc> {
    if text.trim_start().starts_with('{') {
        serde_json::from_str(text).map_err(|e| {
            let line = e.line();
            Error::Parse {
                line: Some(line),
                field: field_on_line(text, line),
                message: e.to_string(),
            }
        })
    } else {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|span| text[..span.start.min(text.len())].matches('\n').count() + 1);
            Error::Parse {
                line,
                field: line.and_then(|l| field_on_line(text, l)),
                message: e.message().to_string(),
            }
        })
    }
}

fn field_on_line(text: &str, line: usize) -> Option<String> {
    let content = text.lines().nth(line.checked_sub(1)?)?;
    let key = content.split(['=', ':']).next()?.trim().trim_matches('"');
    (!key.is_empty() && key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'))
        .then(|| key.to_string())
}

/// Parse and validate a scenario document, applying defaults.
pub fn load_scenario(text: &str) -> Result<Scenario> {
    let doc = parse_doc(text)?;
    let controller = doc
        .controller
        .ok_or_else(|| Error::validation("controller", "missing"))?;
    let defaults = RobotParams::default();
    let params = RobotParams {
        m1: doc.m1.unwrap_or(defaults.m1),
        m2: doc.m2.unwrap_or(defaults.m2),
        l1: doc.l1.unwrap_or(defaults.l1),
        l2: doc.l2.unwrap_or(defaults.l2),
        j1: doc.j1.unwrap_or(defaults.j1),
        j2: doc.j2.unwrap_or(defaults.j2),
    };
    let [t1, t2, w1, w2] = doc.initial.unwrap_or([0.0; 4]);
    let guess = JointState::new(ChartPoint::new(t1, t2), TangentVector::new(w1, w2));
    let initial = if doc.project_initial.unwrap_or(false) {
        InitialState::Projected(guess)
    } else {
        InitialState::Exact(guess)
    };

    let constraint = match doc.constraint {
        Some(ConstraintKind::Ellipse) => {
            let a = doc
                .ellipse_a
                .ok_or_else(|| Error::validation("ellipse_a", "required for an ellipse"))?;
            let b = doc
                .ellipse_b
                .ok_or_else(|| Error::validation("ellipse_b", "required for an ellipse"))?;
            let [cx, cy] = doc.ellipse_center.unwrap_or([0.0, 0.0]);
            Some(ConstraintSpec::Ellipse {
                a,
                b,
                center: ToolPoint::new(cx, cy),
            })
        }
        None => {
            for (key, present) in [
                ("ellipse_a", doc.ellipse_a.is_some()),
                ("ellipse_b", doc.ellipse_b.is_some()),
                ("ellipse_center", doc.ellipse_center.is_some()),
            ] {
                if present {
                    return Err(Error::validation(key, "given without `constraint`"));
                }
            }
            None
        }
    };

    let x_d = doc.x_d.map(|[x, y]| ToolPoint::new(x, y));
    let controller = match controller {
        ControllerKind::Free => {
            for (key, present) in [
                ("x_d", x_d.is_some()),
                ("k1", doc.k1.is_some()),
                ("k", doc.k.is_some()),
                ("eps1", doc.eps1.is_some()),
                ("eps2", doc.eps2.is_some()),
                ("constraint", constraint.is_some()),
            ] {
                unused(key, present)?;
            }
            ControllerSpec::Free
        }
        ControllerKind::ToolRegulator => {
            for (key, present) in [
                ("eps1", doc.eps1.is_some()),
                ("eps2", doc.eps2.is_some()),
                ("constraint", constraint.is_some()),
            ] {
                unused(key, present)?;
            }
            ControllerSpec::ToolRegulator {
                x_d: required("x_d", x_d)?,
                gains: Gains::new(required("k1", doc.k1)?, required("k", doc.k)?),
            }
        }
        ControllerKind::NormalOnly => {
            for (key, present) in [
                ("x_d", x_d.is_some()),
                ("k1", doc.k1.is_some()),
                ("k", doc.k.is_some()),
                ("eps2", doc.eps2.is_some()),
            ] {
                unused(key, present)?;
            }
            ControllerSpec::NormalOnly {
                constraint: required("constraint", constraint)?,
                eps1: doc.eps1.unwrap_or(DEFAULT_EPS),
            }
        }
        ControllerKind::Constrained => ControllerSpec::Constrained {
            x_d: required("x_d", x_d)?,
            gains: Gains {
                k1: required("k1", doc.k1)?,
                k: required("k", doc.k)?,
                eps1: doc.eps1.unwrap_or(DEFAULT_EPS),
                eps2: doc.eps2.unwrap_or(DEFAULT_EPS),
            },
            constraint: required("constraint", constraint)?,
        },
    };

    let potential = match doc.potential.unwrap_or(PotentialKind::None) {
        PotentialKind::None => {
            if doc.g0.is_some() {
                return Err(Error::validation("g0", "given without gravity potential"));
            }
            PotentialSpec::None
        }
        PotentialKind::Gravity => PotentialSpec::Gravity {
            g0: doc.g0.unwrap_or(DEFAULT_G0),
        },
    };

    let stride = match doc.stride {
        None => DEFAULT_STRIDE,
        Some(s) if s >= 1 => s as usize,
        Some(_) => return Err(Error::validation("stride", "must be >= 1")),
    };

    let scenario = Scenario {
        name: doc.name.unwrap_or_else(|| "unnamed".into()),
        params,
        initial,
        controller,
        potential,
        dt: doc.dt.unwrap_or(DEFAULT_DT),
        duration: doc.duration.unwrap_or(DEFAULT_DURATION),
        stride,
        contract: Contract {
            settle_tol: doc.settle_tol.unwrap_or(DEFAULT_SETTLE_TOL),
            max_final_tool_error: doc.max_final_tool_error,
            max_final_speed: doc.max_final_speed,
            max_psi: doc.max_psi,
        },
    };
    scenario.validate()?;
    Ok(scenario)
}

pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUILTINS.iter().map(|(name, _)| *name)
}

pub fn builtin_source(name: &str) -> Option<&'static str> {
    BUILTINS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}

pub fn builtin(name: &str) -> Result<Scenario> {
    let text = builtin_source(name).ok_or_else(|| Error::UnknownScenario(name.to_string()))?;
    load_scenario(text)
}

/// A built-in name, or else a path to a scenario file.
pub fn resolve(name_or_path: &str) -> Result<Scenario> {
    if let Some(text) = builtin_source(name_or_path) {
        return load_scenario(text);
    }
    match std::fs::read_to_string(name_or_path) {
        Ok(text) => load_scenario(&text),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            Err(Error::UnknownScenario(name_or_path.to_string()))
        }
        Err(e) => Err(e.into()),
    }
}
