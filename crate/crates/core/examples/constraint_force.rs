//! The normal constraint force keeps the tool on the ellipse; scaling it by
//! 1 + 1e-3 lets the tool drift off.

use std::f64::consts::PI;

use geoarm::control::{init_on_constraint, psi, ConstraintSpec, NormalForce};
use geoarm::dynamics::{simulate, JointState, SimConfig};
use geoarm::geometry::{metric_at, ChartPoint, RobotParams, TangentVector};

fn main() -> geoarm::Result<()> {
    let params = RobotParams::default();
    let c = ConstraintSpec::ellipse(0.3, 0.6);
    let s = init_on_constraint(
        &params,
        ChartPoint::new(PI / 2.0, PI / 2.0 - 0.5),
        TangentVector::new(1.0, 0.0),
        &c,
    )?;
    let speed = metric_at(&params, s.q).norm(s.v);
    let start = JointState::new(s.q, (0.8 / speed) * s.v);

    for scale in [1.0, 1.0 + 1e-3] {
        let force = NormalForce {
            lambda_scale: scale,
            ..NormalForce::new(c, 1e-28)
        };
        let traj = simulate(&params, start, &force, &SimConfig::default())?;
        let max_psi = traj
            .samples
            .iter()
            .map(|s| psi(&params, s.state.q, &c).abs())
            .fold(0.0, f64::max);
        let last = traj.last().unwrap();
        println!(
            "lambda x {scale:<6} max |psi| {max_psi:.3e}  final tool ({:+.4}, {:+.4})  lambda {:+.4e}",
            last.tool.x,
            last.tool.y,
            last.control.lambda.unwrap()
        );
    }
    Ok(())
}
