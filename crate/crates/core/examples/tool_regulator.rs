//! The tool regulator on both built-in references, and what happens when the
//! start is nudged off the singular rest configuration.

use geoarm::dynamics::JointState;
use geoarm::geometry::{ChartPoint, TangentVector};
use geoarm::harness::{builtin, run, InitialState};

fn report(label: &str, scenario: &geoarm::harness::Scenario) -> geoarm::Result<()> {
    let (traj, m) = run(scenario)?;
    let last = traj.last().unwrap();
    println!(
        "{label:<28} tool ({:+.4}, {:+.4})  error {:.2e}  |v|_g {:.2e}  settled {}",
        last.tool.x,
        last.tool.y,
        m.final_tool_error.unwrap(),
        m.final_speed,
        m.settling_time
            .map_or("never".into(), |t| format!("at {t:.2} s"))
    );
    Ok(())
}

fn main() -> geoarm::Result<()> {
    for name in ["paper-sim-1", "paper-sim-2"] {
        report(name, &builtin(name)?)?;
    }
    // From (0, 0) the error to (-0.6, 0) is orthogonal to the range of Dx, so
    // grad V vanishes and the arm stays put. A small offset breaks the tie.
    let mut nudged = builtin("paper-sim-2")?;
    nudged.initial = InitialState::Exact(JointState::new(
        ChartPoint::new(0.0, 0.01),
        TangentVector::ZERO,
    ));
    report("paper-sim-2 from (0, 0.01)", &nudged)?;
    Ok(())
}
