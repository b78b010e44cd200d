//! Geometric feedback laws acting on the tool.
//!
//! * [`tool_regulator`]: u = grad U − k·v − grad V with the Lasalle potential
//!   V(q) = k₁/2 ‖x(q) − x_d‖².
//! * [`lambda_normal`]: the normal constraint force λ·grad Ψ that keeps the
//!   configuration on N = Ψ⁻¹(0), Ψ = Φ∘x, when started there with tangent velocity.
//! * [`constrained_regulator`]: u = λ·grad Ψ − (grad V)_∥ − k·v_∥.
//!
//! Denominators carry the regularizers ε₁ (in λ) and ε₂ (in the unit normal).

use serde::{Deserialize, Serialize};

use crate::dynamics::{Controller, JointState, PotentialSpec};
use crate::geometry::{
    covariant_derivative_along, gradient, metric_at, ChartPoint, Covector, MetricTensor,
    RobotParams, TangentVector,
};
use crate::kinematics::{
    tool_jacobian, tool_position, workspace_contains, ToolPoint, WorkspaceRegion,
};
use crate::{Error, Result};

pub const DEFAULT_EPS: f64 = 1e-28;

/// Newton iterations allowed in [`init_on_constraint`].
pub const NEWTON_MAX_STEPS: usize = 50;
/// Residual |Ψ| accepted by [`init_on_constraint`].
pub const NEWTON_TOL: f64 = 1e-12;
/// |grad Ψ|_g below which the Newton projection gives up.
pub const MIN_GRAD_NORM: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gains {
    /// Potential gain in V = k₁/2 ‖x − x_d‖².
    pub k1: f64,
    /// Friction gain.
    pub k: f64,
    pub eps1: f64,
    pub eps2: f64,
}

impl Gains {
    pub fn new(k1: f64, k: f64) -> Self {
        Gains {
            k1,
            k,
            eps1: DEFAULT_EPS,
            eps2: DEFAULT_EPS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k1.is_finite() && self.k1 > 0.0) {
            return Err(Error::validation("k1", "must be > 0"));
        }
        if !(self.k.is_finite() && self.k > 0.0) {
            return Err(Error::validation("k", "must be > 0"));
        }
        if !(self.eps1.is_finite() && self.eps1 >= 0.0) {
            return Err(Error::validation("eps1", "must be >= 0"));
        }
        if !(self.eps2.is_finite() && self.eps2 >= 0.0) {
            return Err(Error::validation("eps2", "must be >= 0"));
        }
        Ok(())
    }
}

/// Workspace constraint S = Φ⁻¹(0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintSpec {
    /// Φ(p) = ((p_x − c_x)/a)² + ((p_y − c_y)/b)² − 1.
    Ellipse { a: f64, b: f64, center: ToolPoint },
}

impl ConstraintSpec {
    pub fn ellipse(a: f64, b: f64) -> Self {
        ConstraintSpec::Ellipse {
            a,
            b,
            center: ToolPoint::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ConstraintSpec::Ellipse { a, b, center } => {
                if !(a.is_finite() && a > 0.0) {
                    return Err(Error::validation("ellipse_a", "must be > 0"));
                }
                if !(b.is_finite() && b > 0.0) {
                    return Err(Error::validation("ellipse_b", "must be > 0"));
                }
                if !center.is_finite() {
                    return Err(Error::validation("ellipse_center", "must be finite"));
                }
                Ok(())
            }
        }
    }

    pub fn description(&self) -> String {
        match self {
            ConstraintSpec::Ellipse { a, b, center } => format!(
                "ellipse semi-axes ({a}, {b}) centered at ({}, {})",
                center.x, center.y
            ),
        }
    }

    pub fn phi(&self, p: ToolPoint) -> f64 {
        match *self {
            ConstraintSpec::Ellipse { a, b, center } => {
                let (dx, dy) = ((p.x - center.x) / a, (p.y - center.y) / b);
                dx * dx + dy * dy - 1.0
            }
        }
    }

    /// Euclidean gradient ∇Φ(p).
    pub fn grad_phi(&self, p: ToolPoint) -> [f64; 2] {
        match *self {
            ConstraintSpec::Ellipse { a, b, center } => [
                2.0 * (p.x - center.x) / (a * a),
                2.0 * (p.y - center.y) / (b * b),
            ],
        }
    }

    /// Point of S at curve parameter `s` (2π-periodic).
    pub fn point_at(&self, s: f64) -> ToolPoint {
        match *self {
            ConstraintSpec::Ellipse { a, b, center } => {
                ToolPoint::new(center.x + a * s.cos(), center.y + b * s.sin())
            }
        }
    }

    /// d/ds of [`ConstraintSpec::point_at`].
    pub fn tangent_at(&self, s: f64) -> [f64; 2] {
        match *self {
            ConstraintSpec::Ellipse { a, b, .. } => [-a * s.sin(), b * s.cos()],
        }
    }
}

/// A control value with the diagnostics of its decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlOutput {
    pub u: TangentVector,
    pub lambda: Option<f64>,
    /// λ·grad Ψ, zero for unconstrained laws.
    pub normal_component: TangentVector,
    pub tangential_component: TangentVector,
    pub psi_residual: Option<f64>,
}

impl ControlOutput {
    pub fn unconstrained(u: TangentVector) -> Self {
        ControlOutput {
            u,
            lambda: None,
            normal_component: TangentVector::ZERO,
            tangential_component: u,
            psi_residual: None,
        }
    }

    fn constrained(
        lambda: f64,
        grad_psi: TangentVector,
        tangential: TangentVector,
        psi: f64,
    ) -> Self {
        let normal = lambda * grad_psi;
        ControlOutput {
            u: normal + tangential,
            lambda: Some(lambda),
            normal_component: normal,
            tangential_component: tangential,
            psi_residual: Some(psi),
        }
    }
}

pub fn lasalle_potential(params: &RobotParams, q: ChartPoint, x_d: ToolPoint, k1: f64) -> f64 {
    let x = tool_position(params, q);
    let (ex, ey) = (x.x - x_d.x, x.y - x_d.y);
    0.5 * k1 * (ex * ex + ey * ey)
}

/// dV_q = k₁ Dxᵀ (x(q) − x_d).
pub fn lasalle_differential(
    params: &RobotParams,
    q: ChartPoint,
    x_d: ToolPoint,
    k1: f64,
) -> Covector {
    let x = tool_position(params, q);
    let d = tool_jacobian(params, q).pull_back([k1 * (x.x - x_d.x), k1 * (x.y - x_d.y)]);
    Covector::new(d[0], d[1])
}

pub fn grad_lasalle(
    params: &RobotParams,
    q: ChartPoint,
    x_d: ToolPoint,
    k1: f64,
) -> Result<TangentVector> {
    gradient(
        &metric_at(params, q),
        lasalle_differential(params, q, x_d, k1),
    )
}

/// u = grad U − k·v − grad V.
pub fn tool_regulator(
    params: &RobotParams,
    s: &JointState,
    x_d: ToolPoint,
    gains: &Gains,
    potential: &PotentialSpec,
) -> Result<ControlOutput> {
    let grad_u = potential.gradient(params, s.q)?;
    let grad_v = grad_lasalle(params, s.q, x_d, gains.k1)?;
    Ok(ControlOutput::unconstrained(
        grad_u - gains.k * s.v - grad_v,
    ))
}

/// Ψ = Φ∘x.
pub fn psi(params: &RobotParams, q: ChartPoint, c: &ConstraintSpec) -> f64 {
    c.phi(tool_position(params, q))
}

pub fn psi_differential(params: &RobotParams, q: ChartPoint, c: &ConstraintSpec) -> Covector {
    let d = tool_jacobian(params, q).pull_back(c.grad_phi(tool_position(params, q)));
    Covector::new(d[0], d[1])
}

/// grad_g Ψ = G⁻¹ Dxᵀ ∇Φ(x(q)).
pub fn grad_psi(params: &RobotParams, q: ChartPoint, c: &ConstraintSpec) -> Result<TangentVector> {
    gradient(&metric_at(params, q), psi_differential(params, q, c))
}

/// λ = −g(D grad Ψ/Dt, v) / (|grad Ψ|²_g + ε₁).
pub fn lambda_normal(
    params: &RobotParams,
    s: &JointState,
    c: &ConstraintSpec,
    eps1: f64,
) -> Result<f64> {
    let metric = metric_at(params, s.q);
    let n = grad_psi(params, s.q, c)?;
    let dn = covariant_derivative_along(params, |q| grad_psi(params, q, c), s.q, s.v)?;
    Ok(-metric.inner(dn, s.v) / (metric.norm_sq(n) + eps1))
}

fn project_with(
    metric: &MetricTensor,
    w: TangentVector,
    grad: TangentVector,
    eps2: f64,
) -> TangentVector {
    let norm = metric.norm(grad);
    let scale = norm + eps2;
    if scale == 0.0 {
        // grad Ψ = 0 and no regularization: nothing to remove
        return w;
    }
    let n = (1.0 / scale) * grad;
    w - metric.inner(w, n) * n
}

/// w_∥ = w − g(w, n) n with n = grad Ψ / (|grad Ψ|_g + ε₂).
pub fn project_tangent(
    params: &RobotParams,
    q: ChartPoint,
    w: TangentVector,
    c: &ConstraintSpec,
    eps2: f64,
) -> Result<TangentVector> {
    let metric = metric_at(params, q);
    let grad = grad_psi(params, q, c)?;
    Ok(project_with(&metric, w, grad, eps2))
}

/// u = λ·grad Ψ − (grad V)_∥ − k·v_∥.
pub fn constrained_regulator(
    params: &RobotParams,
    s: &JointState,
    x_d: ToolPoint,
    gains: &Gains,
    c: &ConstraintSpec,
) -> Result<ControlOutput> {
    let metric = metric_at(params, s.q);
    let grad = grad_psi(params, s.q, c)?;
    let lambda = lambda_normal(params, s, c, gains.eps1)?;
    let grad_v = grad_lasalle(params, s.q, x_d, gains.k1)?;
    let tangential = -project_with(&metric, grad_v, grad, gains.eps2)
        - gains.k * project_with(&metric, s.v, grad, gains.eps2);
    Ok(ControlOutput::constrained(
        lambda,
        grad,
        tangential,
        psi(params, s.q, c),
    ))
}

/// Newton projection of `q_guess` onto N along grad Ψ. Returns the point and
/// the number of Newton steps taken.
pub fn project_onto_constraint(
    params: &RobotParams,
    q_guess: ChartPoint,
    c: &ConstraintSpec,
) -> Result<(ChartPoint, usize)> {
    let mut q = q_guess;
    for step in 0..=NEWTON_MAX_STEPS {
        let residual = psi(params, q, c);
        if residual.abs() <= NEWTON_TOL {
            return Ok((q, step));
        }
        if step == NEWTON_MAX_STEPS {
            return Err(Error::NoConvergence {
                iterations: step,
                residual: residual.abs(),
            });
        }
        let grad = grad_psi(params, q, c)?;
        let norm_sq = metric_at(params, q).norm_sq(grad);
        if norm_sq.sqrt() < MIN_GRAD_NORM {
            return Err(Error::SingularGradient {
                norm: norm_sq.sqrt(),
            });
        }
        q = q.displaced(grad, -residual / norm_sq);
    }
    unreachable!()
}

/// A state on N with velocity tangent to N: the projection of `q_guess` and
/// the exact (ε₂ = 0) tangential part of `v_guess`.
pub fn init_on_constraint(
    params: &RobotParams,
    q_guess: ChartPoint,
    v_guess: TangentVector,
    c: &ConstraintSpec,
) -> Result<JointState> {
    let (q, _) = project_onto_constraint(params, q_guess, c)?;
    let v = project_tangent(params, q, v_guess, c, 0.0)?;
    Ok(JointState::new(q, v))
}

/// A point of S where x − x_d is normal to S, i.e. a critical point of V
/// restricted to the constraint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub point: ToolPoint,
    pub distance: f64,
}

impl CriticalPoint {
    pub fn is_target(&self) -> bool {
        self.distance <= 1e-9
    }
}

/// Scan S for critical points of ‖x − x_d‖² along S.
///
/// Sign changes of ⟨P(s) − x_d, P′(s)⟩ on a `samples`-point grid are refined by
/// bisection. Points of S outside the workspace are skipped since they have no
/// preimage in N. Any returned point that is not the target violates the
/// geometric hypothesis of the constrained regulator.
pub fn constrained_critical_points(
    params: &RobotParams,
    c: &ConstraintSpec,
    x_d: ToolPoint,
    samples: usize,
) -> Vec<CriticalPoint> {
    use std::f64::consts::TAU;
    let f = |s: f64| {
        let p = c.point_at(s);
        let t = c.tangent_at(s);
        (p.x - x_d.x) * t[0] + (p.y - x_d.y) * t[1]
    };
    let mut found: Vec<CriticalPoint> = Vec::new();
    let samples = samples.max(8);
    for i in 0..samples {
        let (mut lo, mut hi) = (
            TAU * i as f64 / samples as f64,
            TAU * (i + 1) as f64 / samples as f64,
        );
        let (flo, fhi) = (f(lo), f(hi));
        let root = if flo == 0.0 {
            lo
        } else if flo * fhi < 0.0 {
            let mut flo = flo;
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid);
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if flo * fm < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            0.5 * (lo + hi)
        } else {
            continue;
        };
        let point = c.point_at(root);
        if workspace_contains(params, point) == WorkspaceRegion::Outside {
            continue;
        }
        let cp = CriticalPoint {
            point,
            distance: point.distance(x_d),
        };
        if !found.iter().any(|other| other.point.distance(point) < 1e-9) {
            found.push(cp);
        }
    }
    found
}

/// Uncontrolled motion, u = 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct FreeMotion;

impl Controller for FreeMotion {
    fn control(&self, _: &RobotParams, _: f64, _: &JointState) -> Result<ControlOutput> {
        Ok(ControlOutput::unconstrained(TangentVector::ZERO))
    }
}

/// Pure friction u = −k·v.
#[derive(Debug, Clone, Copy)]
pub struct Friction {
    pub k: f64,
}

impl Controller for Friction {
    fn control(&self, _: &RobotParams, _: f64, s: &JointState) -> Result<ControlOutput> {
        Ok(ControlOutput::unconstrained(-self.k * s.v))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ToolRegulator {
    pub x_d: ToolPoint,
    pub gains: Gains,
    pub potential: PotentialSpec,
}

impl Controller for ToolRegulator {
    fn control(&self, params: &RobotParams, _: f64, s: &JointState) -> Result<ControlOutput> {
        tool_regulator(params, s, self.x_d, &self.gains, &self.potential)
    }
}

/// Only the normal constraint force, u = λ·grad Ψ.
///
/// `lambda_scale` multiplies λ; anything other than 1 breaks the invariance of N.
#[derive(Debug, Clone, Copy)]
pub struct NormalForce {
    pub constraint: ConstraintSpec,
    pub eps1: f64,
    pub lambda_scale: f64,
}

impl NormalForce {
    pub fn new(constraint: ConstraintSpec, eps1: f64) -> Self {
        NormalForce {
            constraint,
            eps1,
            lambda_scale: 1.0,
        }
    }
}

impl Controller for NormalForce {
    fn control(&self, params: &RobotParams, _: f64, s: &JointState) -> Result<ControlOutput> {
        let grad = grad_psi(params, s.q, &self.constraint)?;
        let lambda = self.lambda_scale * lambda_normal(params, s, &self.constraint, self.eps1)?;
        Ok(ControlOutput::constrained(
            lambda,
            grad,
            TangentVector::ZERO,
            psi(params, s.q, &self.constraint),
        ))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConstrainedRegulator {
    pub x_d: ToolPoint,
    pub gains: Gains,
    pub constraint: ConstraintSpec,
}

impl Controller for ConstrainedRegulator {
    fn control(&self, params: &RobotParams, _: f64, s: &JointState) -> Result<ControlOutput> {
        constrained_regulator(params, s, self.x_d, &self.gains, &self.constraint)
    }
}
