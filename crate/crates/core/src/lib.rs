//! Riemannian dynamics and geometric feedback control of a planar two-link arm.
//!
//! The configuration space is the torus T² in the chart (θ₁, θ₂), equipped with
//! the kinetic-energy metric. On top of it the crate provides:
//!
//! - [`geometry`]: metric, Christoffel symbols (closed form and a finite-difference
//!   Levi-Civita oracle), the sharp operator and covariant derivatives along curves;
//! - [`kinematics`]: tool map, its Jacobian, singularity and workspace analysis;
//! - [`dynamics`]: forced geodesic equations, RK4 integration and energy diagnostics;
//! - [`control`]: the tool PD-regulator, the normal constraint force and the
//!   constrained tool regulator;
//! - [`harness`]: scenario files, built-in scenarios, run metrics, CSV/JSON export
//!   and the invariant suite behind `geoarm verify`.

// Tensor code indexes by component on purpose.
#![allow(clippy::needless_range_loop)]

pub mod control;
pub mod dynamics;
mod error;
pub mod geometry;
pub mod harness;
pub mod kinematics;

pub use error::{Error, Result};

pub use control::{ConstraintSpec, ControlOutput, Gains};
pub use dynamics::{EnergyReport, JointState, PotentialSpec, Trajectory};
pub use geometry::{ChartPoint, Christoffel, Covector, MetricTensor, RobotParams, TangentVector};
pub use kinematics::{ToolJacobian, ToolPoint};
