//! Closed-form Christoffel symbols of the two-link arm against the generic
//! finite-difference Levi-Civita formula.

use std::f64::consts::PI;

use geoarm::geometry::{
    christoffel_closed_form, christoffel_oracle, metric_at, ChartPoint, RobotParams, ORACLE_STEP,
};

fn main() -> geoarm::Result<()> {
    let params = RobotParams::default();
    println!(
        "{:>8} {:>8} {:>12} {:>12} {:>12} {:>12} {:>10}",
        "theta1", "theta2", "G1_11", "G1_22", "G2_11", "G2_22", "max diff"
    );
    for i in 0..8 {
        let q = ChartPoint::new(0.3, 0.3 - PI * i as f64 / 4.0);
        let closed = christoffel_closed_form(&params, q)?;
        let oracle = christoffel_oracle(|x| metric_at(&params, x), q, ORACLE_STEP)?;
        println!(
            "{:>8.3} {:>8.3} {:>12.5e} {:>12.5e} {:>12.5e} {:>12.5e} {:>10.2e}",
            q.theta1,
            q.theta2,
            closed.get(0, 0, 0),
            closed.get(0, 1, 1),
            closed.get(1, 0, 0),
            closed.get(1, 1, 1),
            closed.max_abs_diff(&oracle)
        );
    }
    Ok(())
}
