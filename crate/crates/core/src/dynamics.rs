//! Forced geodesic equations of motion, fixed-step RK4 and energy diagnostics.
//!
//! The closed loop is D γ′/Dt = −grad U(γ) + u, with the control u already a
//! tangent vector (a covector control can be raised with [`crate::geometry::sharp`]).
//! In the chart this reads θ̈ᵏ = −Γᵏᵢⱼ θ̇ⁱθ̇ʲ − (grad U)ᵏ + uᵏ.

use serde::{Deserialize, Serialize};

use crate::control::ControlOutput;
use crate::geometry::{
    christoffel_closed_form, gradient, metric_at, ChartPoint, Covector, RobotParams, TangentVector,
};
use crate::kinematics::{singularity_margin, tool_position, ToolPoint};
use crate::{Error, Result};

/// Samples with a singularity margin below this are flagged.
pub const NEAR_SINGULAR_MARGIN: f64 = 1e-3;

/// A point of the tangent bundle: configuration and velocity.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JointState {
    pub q: ChartPoint,
    pub v: TangentVector,
}

impl JointState {
    pub const fn new(q: ChartPoint, v: TangentVector) -> Self {
        JointState { q, v }
    }

    pub fn at_rest(q: ChartPoint) -> Self {
        JointState::new(q, TangentVector::ZERO)
    }

    pub fn is_finite(&self) -> bool {
        self.q.is_finite() && self.v.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyReport {
    pub kinetic: f64,
    pub potential: f64,
    pub total: f64,
    /// g(u, γ′), the rate of change of `total` along the closed loop.
    pub power: f64,
}

/// Physical potential acting on the arm.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    #[default]
    None,
    /// U = g₀ (m₁ y_G1 + m₂ y_G2) with centers of mass at the link midpoints.
    Gravity { g0: f64 },
}

impl PotentialSpec {
    pub fn value(&self, params: &RobotParams, q: ChartPoint) -> f64 {
        match *self {
            PotentialSpec::None => 0.0,
            PotentialSpec::Gravity { g0 } => {
                let (s1, s2) = (q.theta1.sin(), q.theta2.sin());
                let y1 = 0.5 * params.l1 * s1;
                let y2 = params.l1 * s1 + 0.5 * params.l2 * s2;
                g0 * (params.m1 * y1 + params.m2 * y2)
            }
        }
    }

    pub fn differential(&self, params: &RobotParams, q: ChartPoint) -> Covector {
        match *self {
            PotentialSpec::None => Covector::ZERO,
            PotentialSpec::Gravity { g0 } => {
                let (c1, c2) = (q.theta1.cos(), q.theta2.cos());
                Covector::new(
                    g0 * params.l1 * c1 * (0.5 * params.m1 + params.m2),
                    g0 * 0.5 * params.m2 * params.l2 * c2,
                )
            }
        }
    }

    pub fn gradient(&self, params: &RobotParams, q: ChartPoint) -> Result<TangentVector> {
        match self {
            PotentialSpec::None => Ok(TangentVector::ZERO),
            _ => gradient(&metric_at(params, q), self.differential(params, q)),
        }
    }
}

/// Kinetic energy from the expanded two-link formula
/// ⅛(m₁+4m₂)l₁²θ̇₁² + ⅛m₂l₂²θ̇₂² + ½m₂l₁l₂cos(θ₁−θ₂)θ̇₁θ̇₂ + ½J₁θ̇₁² + ½J₂θ̇₂².
pub fn kinetic_energy(params: &RobotParams, s: &JointState) -> f64 {
    let RobotParams {
        m1,
        m2,
        l1,
        l2,
        j1,
        j2,
    } = *params;
    let (w1, w2) = (s.v.v1, s.v.v2);
    0.125 * (m1 + 4.0 * m2) * l1 * l1 * w1 * w1
        + 0.125 * m2 * l2 * l2 * w2 * w2
        + 0.5 * m2 * l1 * l2 * s.q.relative_angle().cos() * w1 * w2
        + 0.5 * j1 * w1 * w1
        + 0.5 * j2 * w2 * w2
}

pub fn energy_report(
    params: &RobotParams,
    s: &JointState,
    u: TangentVector,
    potential: &PotentialSpec,
) -> EnergyReport {
    let kinetic = kinetic_energy(params, s);
    let pot = potential.value(params, s.q);
    EnergyReport {
        kinetic,
        potential: pot,
        total: kinetic + pot,
        power: metric_at(params, s.q).inner(u, s.v),
    }
}

/// Chart acceleration of the forced geodesic equation.
pub fn forced_acceleration(
    params: &RobotParams,
    s: &JointState,
    u: TangentVector,
    potential: &PotentialSpec,
) -> Result<TangentVector> {
    let christoffel = christoffel_closed_form(params, s.q)?;
    let grad_u = potential.gradient(params, s.q)?;
    Ok(u - christoffel.contract(s.v, s.v) - grad_u)
}

/// A state feedback law, sampled at every integrator stage.
pub trait Controller {
    fn control(&self, params: &RobotParams, t: f64, s: &JointState) -> Result<ControlOutput>;
}

impl<F> Controller for F
where
    F: Fn(&RobotParams, f64, &JointState) -> Result<ControlOutput>,
{
    fn control(&self, params: &RobotParams, t: f64, s: &JointState) -> Result<ControlOutput> {
        self(params, t, s)
    }
}

fn derivative(
    params: &RobotParams,
    potential: &PotentialSpec,
    controller: &dyn Controller,
    t: f64,
    s: &JointState,
) -> Result<(TangentVector, TangentVector)> {
    if !s.is_finite() {
        return Err(Error::NonFinite { t });
    }
    let u = controller.control(params, t, s)?.u;
    Ok((s.v, forced_acceleration(params, s, u, potential)?))
}

fn advance(s: &JointState, dq: TangentVector, dv: TangentVector, h: f64) -> JointState {
    JointState::new(s.q.displaced(dq, h), s.v + h * dv)
}

/// One classical Runge–Kutta step of the first-order system (q̇, v̇) = (v, a).
pub fn rk4_step(
    params: &RobotParams,
    potential: &PotentialSpec,
    controller: &dyn Controller,
    t: f64,
    s: &JointState,
    dt: f64,
) -> Result<JointState> {
    assert!(dt > 0.0, "time step must be positive");
    let (k1q, k1v) = derivative(params, potential, controller, t, s)?;
    let s2 = advance(s, k1q, k1v, 0.5 * dt);
    let (k2q, k2v) = derivative(params, potential, controller, t + 0.5 * dt, &s2)?;
    let s3 = advance(s, k2q, k2v, 0.5 * dt);
    let (k3q, k3v) = derivative(params, potential, controller, t + 0.5 * dt, &s3)?;
    let s4 = advance(s, k3q, k3v, dt);
    let (k4q, k4v) = derivative(params, potential, controller, t + dt, &s4)?;

    let dq = (1.0 / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
    let dv = (1.0 / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    let next = advance(s, dq, dv, dt);
    if next.is_finite() {
        Ok(next)
    } else {
        Err(Error::NonFinite { t: t + dt })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub duration: f64,
    /// Keep one sample every `stride` steps.
    pub stride: usize,
    pub potential: PotentialSpec,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 1e-3,
            duration: 10.0,
            stride: 1,
            potential: PotentialSpec::None,
        }
    }
}

impl SimConfig {
    /// Number of integration steps covering `duration`.
    pub fn steps(&self) -> usize {
        let ratio = self.duration / self.dt;
        let nearest = ratio.round();
        if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
            nearest as usize
        } else {
            ratio.floor() as usize
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub state: JointState,
    pub tool: ToolPoint,
    pub control: ControlOutput,
    pub energy: EnergyReport,
    pub sing_margin: f64,
}

impl Sample {
    pub fn wrapped(&self) -> ChartPoint {
        self.state.q.wrapped()
    }

    pub fn near_singular(&self) -> bool {
        self.sing_margin < NEAR_SINGULAR_MARGIN
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first(&self) -> Option<&Sample> {
        self.samples.first()
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    /// Every `stride`-th sample, starting with the first.
    pub fn decimate(&self, stride: usize) -> Trajectory {
        assert!(stride >= 1);
        Trajectory {
            samples: self.samples.iter().step_by(stride).copied().collect(),
        }
    }
}

fn sample(
    params: &RobotParams,
    potential: &PotentialSpec,
    controller: &dyn Controller,
    t: f64,
    s: &JointState,
) -> Result<Sample> {
    let control = controller.control(params, t, s)?;
    Ok(Sample {
        t,
        state: *s,
        tool: tool_position(params, s.q),
        control,
        energy: energy_report(params, s, control.u, potential),
        sing_margin: singularity_margin(params, s.q),
    })
}

/// Integrate from `initial` for `config.duration` seconds.
pub fn simulate(
    params: &RobotParams,
    initial: JointState,
    controller: &dyn Controller,
    config: &SimConfig,
) -> Result<Trajectory> {
    assert!(config.dt > 0.0 && config.stride >= 1 && config.duration >= 0.0);
    if !initial.is_finite() {
        return Err(Error::NonFinite { t: 0.0 });
    }
    let steps = config.steps();
    let mut samples = Vec::with_capacity(steps / config.stride + 1);
    let mut s = initial;
    samples.push(sample(params, &config.potential, controller, 0.0, &s)?);
    for n in 0..steps {
        let t = n as f64 * config.dt;
        s = rk4_step(params, &config.potential, controller, t, &s, config.dt)?;
        if (n + 1) % config.stride == 0 {
            let t_next = (n + 1) as f64 * config.dt;
            samples.push(sample(params, &config.potential, controller, t_next, &s)?);
        }
    }
    Ok(Trajectory { samples })
}

/// Largest deviation between the centered-difference rate of the total energy
/// and the power g(u, γ′) over interior samples.
///
/// Uses the five-point fourth-order stencil when at least five samples exist
/// (interior = samples with a full stencil), otherwise the three-point one.
/// Fewer than three samples give 0.
pub fn energy_rate_residual(traj: &Trajectory) -> f64 {
    let s = &traj.samples;
    let n = s.len();
    if n < 3 {
        return 0.0;
    }
    let h = s[1].t - s[0].t;
    let e = |i: usize| s[i].energy.total;
    let mut worst: f64 = 0.0;
    if n >= 5 {
        for i in 2..n - 2 {
            let rate = (e(i - 2) - 8.0 * e(i - 1) + 8.0 * e(i + 1) - e(i + 2)) / (12.0 * h);
            worst = worst.max((rate - s[i].energy.power).abs());
        }
    } else {
        for i in 1..n - 1 {
            let rate = (e(i + 1) - e(i - 1)) / (2.0 * h);
            worst = worst.max((rate - s[i].energy.power).abs());
        }
    }
    worst
}
