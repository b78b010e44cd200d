//! The constrained regulator on the built-in ellipse, whose target lies off
//! the curve, and on a target that lies on it.

use geoarm::control::ConstraintSpec;
use geoarm::harness::{builtin, run, ControllerSpec, Scenario};
use geoarm::kinematics::ToolPoint;

fn report(scenario: &Scenario) -> geoarm::Result<()> {
    let (traj, m) = run(scenario)?;
    let c = scenario.controller.constraint().unwrap();
    let x_d = scenario.controller.x_d().unwrap();
    let last = traj.last().unwrap();
    println!(
        "{} ({}), x_d = ({}, {}), Phi(x_d) = {:.3}",
        scenario.name,
        c.description(),
        x_d.x,
        x_d.y,
        c.phi(x_d)
    );
    println!(
        "  final tool ({:+.4}, {:+.4}), error {:.4e}, max |psi| {:.2e}, newton steps {:?}",
        last.tool.x,
        last.tool.y,
        m.final_tool_error.unwrap(),
        m.max_psi.unwrap(),
        m.newton_steps
    );
    for cp in &m.constraint_critical_points {
        println!(
            "  critical point of V on S: ({:+.4}, {:+.4}) at distance {:.4}{}",
            cp.point.x,
            cp.point.y,
            cp.distance,
            if cp.is_target() { " (target)" } else { "" }
        );
    }
    Ok(())
}

fn main() -> geoarm::Result<()> {
    let builtin_run = builtin("paper-constrained")?;
    report(&builtin_run)?;

    let mut on_curve = builtin_run.clone();
    on_curve.name = "target on the curve".into();
    if let ControllerSpec::Constrained { gains, .. } = builtin_run.controller {
        on_curve.controller = ControllerSpec::Constrained {
            x_d: ToolPoint::new(0.0, 0.6),
            gains,
            constraint: ConstraintSpec::ellipse(0.3, 0.6),
        };
    }
    report(&on_curve)
}
