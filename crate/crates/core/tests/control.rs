use std::f64::consts::PI;

use geoarm::control::{
    constrained_regulator, grad_lasalle, grad_psi, init_on_constraint, lambda_normal,
    project_tangent, psi, psi_differential, ConstraintSpec, Gains,
};
use geoarm::dynamics::JointState;
use geoarm::geometry::{metric_at, ChartPoint, RobotParams, TangentVector};
use geoarm::kinematics::{singularity_margin, tool_position, ToolPoint};
use proptest::prelude::*;

fn ellipse() -> ConstraintSpec {
    ConstraintSpec::ellipse(0.3, 0.6)
}

fn chart_point() -> impl Strategy<Value = ChartPoint> {
    (-PI..PI, -PI..PI).prop_map(|(a, b)| ChartPoint::new(a, b))
}

fn vector(scale: f64) -> impl Strategy<Value = TangentVector> {
    (-scale..scale, -scale..scale).prop_map(|(a, b)| TangentVector::new(a, b))
}

/// A state on N with tangent velocity, or None when the Newton projection
/// from `guess` does not converge.
fn on_constraint(guess: ChartPoint, v: TangentVector) -> Option<JointState> {
    let s = init_on_constraint(&RobotParams::default(), guess, v, &ellipse()).ok()?;
    (s.v.max_abs() > 1e-3).then_some(s)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn grad_psi_represents_the_differential(q in chart_point(), w in vector(2.0)) {
        let p = RobotParams::default();
        let g = metric_at(&p, q);
        let lhs = g.inner(grad_psi(&p, q, &ellipse()).unwrap(), w);
        let rhs = psi_differential(&p, q, &ellipse()).pair(w);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0));
    }

    #[test]
    fn projection_is_tangent_and_idempotent(q in chart_point(), w in vector(2.0)) {
        let p = RobotParams::default();
        let c = ellipse();
        let grad = grad_psi(&p, q, &c).unwrap();
        prop_assume!(metric_at(&p, q).norm(grad) > 1e-6);
        let once = project_tangent(&p, q, w, &c, 0.0).unwrap();
        let twice = project_tangent(&p, q, once, &c, 0.0).unwrap();
        prop_assert!((once - twice).max_abs() <= 1e-12 * w.max_abs().max(1.0));
        let g = metric_at(&p, q);
        prop_assert!(g.inner(once, grad).abs() <= 1e-12 * g.norm(grad) * g.norm(w).max(1.0));
    }

    /// Away from the singular set grad V vanishes exactly when the tool is at x_d.
    #[test]
    fn lasalle_gradient_vanishes_only_at_target(q in chart_point(), offset in vector(0.3)) {
        let p = RobotParams::default();
        prop_assume!(singularity_margin(&p, q) >= 0.05);
        let tool = tool_position(&p, q);
        let at = grad_lasalle(&p, q, tool, 200.0).unwrap();
        prop_assert!(at.max_abs() <= 1e-10);
        prop_assume!(offset.max_abs() > 1e-2);
        let away = ToolPoint::new(tool.x + offset.v1, tool.y + offset.v2);
        prop_assert!(grad_lasalle(&p, q, away, 200.0).unwrap().max_abs() > 1e-6);
    }

    #[test]
    fn lambda_is_quadratic_in_velocity(guess in chart_point(), v in vector(1.0)) {
        let p = RobotParams::default();
        let c = ellipse();
        let Some(s) = on_constraint(guess, v) else { return Ok(()) };
        let l1 = lambda_normal(&p, &s, &c, 0.0).unwrap();
        let l2 = lambda_normal(&p, &JointState::new(s.q, 2.0 * s.v), &c, 0.0).unwrap();
        prop_assert!((l2 - 4.0 * l1).abs() <= 1e-6 * l1.abs().max(1e-3), "{} vs {}", l2, 4.0 * l1);
    }

    #[test]
    fn init_lands_on_constraint_with_tangent_velocity(guess in chart_point(), v in vector(1.0)) {
        let p = RobotParams::default();
        let c = ellipse();
        let Ok(s) = init_on_constraint(&p, guess, v, &c) else { return Ok(()) };
        prop_assert!(psi(&p, s.q, &c).abs() <= 1e-12);
        let g = metric_at(&p, s.q);
        prop_assert!(g.inner(s.v, grad_psi(&p, s.q, &c).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn constrained_output_recomposes(guess in chart_point(), v in vector(1.0)) {
        let p = RobotParams::default();
        let c = ellipse();
        let Some(s) = on_constraint(guess, v) else { return Ok(()) };
        let gains = Gains::new(40.0, 30.0);
        let out = constrained_regulator(&p, &s, ToolPoint::new(0.0, 0.3), &gains, &c).unwrap();
        prop_assert!((out.u - out.normal_component - out.tangential_component).max_abs() <= 1e-12 * out.u.max_abs().max(1.0));
        let g = metric_at(&p, s.q);
        let grad = grad_psi(&p, s.q, &c).unwrap();
        // the tangential part is orthogonal to grad Ψ up to the ε₂ regularization
        prop_assert!(g.inner(out.tangential_component, grad).abs() <= 1e-9 * g.norm(out.tangential_component).max(1.0) * g.norm(grad));
    }
}

#[test]
fn at_rest_the_constrained_law_is_pure_tangential_descent() {
    let p = RobotParams::default();
    let c = ellipse();
    let s = init_on_constraint(
        &p,
        ChartPoint::new(PI / 2.0, PI / 2.0 - 0.5),
        TangentVector::ZERO,
        &c,
    )
    .unwrap();
    let x_d = ToolPoint::new(0.0, 0.3);
    let gains = Gains::new(40.0, 30.0);
    let out = constrained_regulator(&p, &s, x_d, &gains, &c).unwrap();
    assert_eq!(out.lambda, Some(0.0));
    let expected = -project_tangent(
        &p,
        s.q,
        grad_lasalle(&p, s.q, x_d, 40.0).unwrap(),
        &c,
        gains.eps2,
    )
    .unwrap();
    assert!((out.u - expected).max_abs() <= 1e-12 * expected.max_abs());
}
