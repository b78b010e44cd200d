//! Coarse picture of |det Dx| over the chart. Dark cells are near the
//! singular lines theta2 = theta1 and theta2 = theta1 + pi.

use geoarm::geometry::RobotParams;
use geoarm::kinematics::singularity_map;

fn main() {
    let params = RobotParams::default();
    let map = singularity_map(&params, 41);
    let shades = [' ', '.', ':', '-', '=', '+', '*', '#', '%', '@'];
    let max = map.max();
    println!("theta2 down, theta1 across, both from -pi to pi; max margin {max:.4}");
    for row in map.margins.iter().rev() {
        let line: String = row
            .iter()
            .map(|&m| shades[((m / max) * (shades.len() - 1) as f64).round() as usize])
            .collect();
        println!("|{line}|");
    }
}
