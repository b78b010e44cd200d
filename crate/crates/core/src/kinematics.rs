//! Tool map of the planar two-link arm, its Jacobian and singular set.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::{ChartPoint, RobotParams, TangentVector};

/// Default boundary tolerance for [`workspace_contains`], in meters.
pub const WORKSPACE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ToolPoint {
    pub x: f64,
    pub y: f64,
}

impl ToolPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        ToolPoint { x, y }
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(&self, other: ToolPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Dx(q), columns ∂x/∂θ₁ and ∂x/∂θ₂.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToolJacobian {
    pub m: [[f64; 2]; 2],
}

impl ToolJacobian {
    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// Dx · v.
    pub fn apply(&self, v: TangentVector) -> ToolPoint {
        ToolPoint::new(
            self.m[0][0] * v.v1 + self.m[0][1] * v.v2,
            self.m[1][0] * v.v1 + self.m[1][1] * v.v2,
        )
    }

    /// Dxᵀ · w, the pull-back of a workspace covector.
    pub fn pull_back(&self, w: [f64; 2]) -> [f64; 2] {
        [
            self.m[0][0] * w[0] + self.m[1][0] * w[1],
            self.m[0][1] * w[0] + self.m[1][1] * w[1],
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorkspaceRegion {
    Inside,
    Boundary,
    Outside,
}

pub fn tool_position(params: &RobotParams, q: ChartPoint) -> ToolPoint {
    let (s1, c1) = q.theta1.sin_cos();
    let (s2, c2) = q.theta2.sin_cos();
    ToolPoint::new(
        params.l1 * c1 + params.l2 * c2,
        params.l1 * s1 + params.l2 * s2,
    )
}

pub fn tool_jacobian(params: &RobotParams, q: ChartPoint) -> ToolJacobian {
    let (s1, c1) = q.theta1.sin_cos();
    let (s2, c2) = q.theta2.sin_cos();
    ToolJacobian {
        m: [
            [-params.l1 * s1, -params.l2 * s2],
            [params.l1 * c1, params.l2 * c2],
        ],
    }
}

/// |det Dx| = l₁l₂|sin(θ₂ − θ₁)|; zero exactly on the singular set.
pub fn singularity_margin(params: &RobotParams, q: ChartPoint) -> f64 {
    (params.l1 * params.l2 * (q.theta2 - q.theta1).sin()).abs()
}

/// Classify a point against the annulus |l₁−l₂| ≤ ‖p‖ ≤ l₁+l₂.
pub fn workspace_contains(params: &RobotParams, p: ToolPoint) -> WorkspaceRegion {
    workspace_contains_with_tol(params, p, WORKSPACE_TOL)
}

pub fn workspace_contains_with_tol(
    params: &RobotParams,
    p: ToolPoint,
    tol: f64,
) -> WorkspaceRegion {
    let r = p.norm();
    let inner = (params.l1 - params.l2).abs();
    let outer = params.l1 + params.l2;
    if (r - outer).abs() <= tol || (r - inner).abs() <= tol {
        WorkspaceRegion::Boundary
    } else if r > inner && r < outer {
        WorkspaceRegion::Inside
    } else {
        WorkspaceRegion::Outside
    }
}

/// Raster of singularity margins over [−π, π]², row index along θ₂ and
/// column index along θ₁.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularityMap {
    pub grid_n: usize,
    pub axis: Vec<f64>,
    pub margins: Vec<Vec<f64>>,
}

impl SingularityMap {
    pub fn max(&self) -> f64 {
        self.margins.iter().flatten().copied().fold(0.0, f64::max)
    }
}

pub fn singularity_map(params: &RobotParams, grid_n: usize) -> SingularityMap {
    assert!(grid_n >= 2, "singularity map needs at least a 2x2 grid");
    let axis: Vec<f64> = (0..grid_n)
        .map(|i| -PI + 2.0 * PI * i as f64 / (grid_n - 1) as f64)
        .collect();
    let margins = axis
        .iter()
        .map(|&t2| {
            axis.iter()
                .map(|&t1| singularity_margin(params, ChartPoint::new(t1, t2)))
                .collect()
        })
        .collect();
    SingularityMap {
        grid_n,
        axis,
        margins,
    }
}
