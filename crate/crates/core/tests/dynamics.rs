use std::f64::consts::PI;

use geoarm::control::{FreeMotion, Friction};
use geoarm::dynamics::{
    energy_rate_residual, forced_acceleration, kinetic_energy, simulate, JointState, PotentialSpec,
    SimConfig,
};
use geoarm::geometry::{metric_at, ChartPoint, RobotParams, TangentVector};
use geoarm::Error;
use proptest::prelude::*;

/// The geodesic equations of the two-link arm written out by hand.
fn geodesic_rhs(p: &RobotParams, s: &JointState) -> [f64; 2] {
    let a = p.j1 + 0.25 * (p.m1 + 4.0 * p.m2) * p.l1 * p.l1;
    let b = 0.5 * p.m2 * p.l1 * p.l2;
    let c = p.j2 + 0.25 * p.m2 * p.l2 * p.l2;
    let d = s.q.theta1 - s.q.theta2;
    let det = a * c - b * b * d.cos().powi(2);
    let g1_11 = b * b * d.sin() * d.cos() / det;
    let g1_22 = c * b * d.sin() / det;
    let g2_11 = -a * b * d.sin() / det;
    let g2_22 = -b * b * d.sin() * d.cos() / det;
    let (v1, v2) = (s.v.v1, s.v.v2);
    [
        -(g1_11 * v1 * v1 + g1_22 * v2 * v2),
        -(g2_11 * v1 * v1 + g2_22 * v2 * v2),
    ]
}

fn state() -> impl Strategy<Value = JointState> {
    (-PI..PI, -PI..PI, -3.0..3.0f64, -3.0..3.0f64)
        .prop_map(|(a, b, c, d)| JointState::new(ChartPoint::new(a, b), TangentVector::new(c, d)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn free_acceleration_is_the_geodesic_equation(s in state()) {
        let p = RobotParams::default();
        let acc = forced_acceleration(&p, &s, TangentVector::ZERO, &PotentialSpec::None).unwrap();
        let expected = geodesic_rhs(&p, &s);
        prop_assert!((acc.v1 - expected[0]).abs() <= 1e-12 * expected[0].abs().max(1.0));
        prop_assert!((acc.v2 - expected[1]).abs() <= 1e-12 * expected[1].abs().max(1.0));
    }

    #[test]
    fn kinetic_energy_is_half_the_quadratic_form(s in state()) {
        let p = RobotParams::default();
        let g = metric_at(&p, s.q);
        let direct = 0.5 * (g.g11 * s.v.v1 * s.v.v1 + 2.0 * g.g12 * s.v.v1 * s.v.v2 + g.g22 * s.v.v2 * s.v.v2);
        prop_assert!((kinetic_energy(&p, &s) - direct).abs() <= 1e-12 * direct.max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn free_motion_is_time_reversible(s in state()) {
        let p = RobotParams::default();
        let cfg = SimConfig { duration: 2.0, ..SimConfig::default() };
        let there = simulate(&p, s, &FreeMotion, &cfg).unwrap().last().unwrap().state;
        let back = simulate(&p, JointState::new(there.q, -there.v), &FreeMotion, &cfg)
            .unwrap()
            .last()
            .unwrap()
            .state;
        prop_assert!((back.q.theta1 - s.q.theta1).abs() <= 1e-6);
        prop_assert!((back.q.theta2 - s.q.theta2).abs() <= 1e-6);
        prop_assert!((back.v + s.v).max_abs() <= 1e-6);
    }
}

#[test]
fn counter_rotating_start_conserves_energy() {
    let p = RobotParams::default();
    let s0 = JointState::new(ChartPoint::new(0.0, 0.0), TangentVector::new(1.0, -1.0));
    let traj = simulate(&p, s0, &FreeMotion, &SimConfig::default()).unwrap();
    let e0 = traj.first().unwrap().energy.total;
    let drift = traj
        .samples
        .iter()
        .map(|s| (s.energy.total - e0).abs() / e0)
        .fold(0.0, f64::max);
    assert!(drift <= 1e-6, "drift {drift}");
    assert!(energy_rate_residual(&traj) <= 1e-6);
}

#[test]
fn one_step_preserves_kinetic_energy() {
    let p = RobotParams::default();
    let s0 = JointState::new(ChartPoint::new(0.4, -1.1), TangentVector::new(0.8, 1.3));
    let cfg = SimConfig {
        duration: 1e-3,
        ..SimConfig::default()
    };
    let traj = simulate(&p, s0, &FreeMotion, &cfg).unwrap();
    let (a, b) = (
        traj.samples[0].energy.kinetic,
        traj.samples[1].energy.kinetic,
    );
    assert!((a - b).abs() <= 1e-10);
}

#[test]
fn halving_the_step_cuts_the_error_sixteenfold() {
    let p = RobotParams::default();
    let s0 = JointState::new(ChartPoint::new(0.3, 1.2), TangentVector::new(1.5, -1.0));
    let end = |dt: f64| {
        let cfg = SimConfig {
            dt,
            duration: 1.0,
            ..SimConfig::default()
        };
        simulate(&p, s0, &FreeMotion, &cfg)
            .unwrap()
            .last()
            .unwrap()
            .state
    };
    let dt = 0.005;
    let reference = end(dt / 10.0);
    let err = |s: JointState| {
        (s.q.theta1 - reference.q.theta1).abs() + (s.q.theta2 - reference.q.theta2).abs()
    };
    let ratio = err(end(dt)) / err(end(dt / 2.0));
    assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn friction_power_matches_energy_rate() {
    let p = RobotParams::default();
    let s0 = JointState::new(ChartPoint::new(-0.7, 2.0), TangentVector::new(2.0, 0.5));
    let k = 3.0;
    let traj = simulate(&p, s0, &Friction { k }, &SimConfig::default()).unwrap();
    for s in &traj.samples {
        let speed_sq = metric_at(&p, s.state.q).norm_sq(s.state.v);
        assert!((s.energy.power + k * speed_sq).abs() <= 1e-12 * speed_sq.max(1.0));
    }
    assert!(energy_rate_residual(&traj) <= 1e-5);
    let e: Vec<f64> = traj.samples.iter().map(|s| s.energy.total).collect();
    assert!(e.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn gravity_enters_as_a_potential() {
    let p = RobotParams::default();
    let gravity = PotentialSpec::Gravity { g0: 9.81 };
    let s0 = JointState::new(ChartPoint::new(0.2, 0.9), TangentVector::ZERO);
    let cfg = SimConfig {
        duration: 2.0,
        potential: gravity,
        ..SimConfig::default()
    };
    let traj = simulate(&p, s0, &FreeMotion, &cfg).unwrap();
    let e0 = traj.first().unwrap().energy.total;
    for s in &traj.samples {
        assert!((s.energy.total - e0).abs() <= 1e-6 * e0.abs().max(1.0));
    }
    // the arm falls
    assert!(traj.last().unwrap().energy.potential < e0);
}

#[test]
fn blow_up_reports_time() {
    let p = RobotParams::default();
    let runaway = |_: &RobotParams, t: f64, _: &JointState| {
        let u = if t > 0.05 { f64::INFINITY } else { 0.0 };
        Ok(geoarm::ControlOutput::unconstrained(TangentVector::new(
            u, 0.0,
        )))
    };
    let err = simulate(
        &p,
        JointState::at_rest(ChartPoint::new(0.1, 0.5)),
        &runaway,
        &SimConfig::default(),
    )
    .unwrap_err();
    match err {
        Error::NonFinite { t } => assert!((0.05..0.06).contains(&t), "t = {t}"),
        other => panic!("unexpected {other:?}"),
    }
}
