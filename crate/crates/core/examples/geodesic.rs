//! Free motion of the arm: a geodesic of the kinetic-energy metric.

use geoarm::control::FreeMotion;
use geoarm::dynamics::{energy_rate_residual, simulate, JointState, SimConfig};
use geoarm::geometry::{ChartPoint, RobotParams, TangentVector};

fn main() -> geoarm::Result<()> {
    let params = RobotParams::default();
    let start = JointState::new(ChartPoint::new(0.0, 0.0), TangentVector::new(1.0, -1.0));
    let traj = simulate(&params, start, &FreeMotion, &SimConfig::default())?;
    let e0 = traj.samples[0].energy.total;

    println!(
        "{:>6} {:>10} {:>10} {:>10} {:>10} {:>12}",
        "t", "theta1", "theta2", "v1", "v2", "E - E0"
    );
    for s in traj.samples.iter().step_by(500) {
        println!(
            "{:>6.2} {:>10.5} {:>10.5} {:>10.5} {:>10.5} {:>12.3e}",
            s.t,
            s.state.q.theta1,
            s.state.q.theta2,
            s.state.v.v1,
            s.state.v.v2,
            s.energy.total - e0
        );
    }
    println!("energy-rate residual {:.3e}", energy_rate_residual(&traj));
    Ok(())
}
