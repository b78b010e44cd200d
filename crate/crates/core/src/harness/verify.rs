//! Invariant suite behind the `verify` subcommand.
//!
//! Each check measures one nonnegative quantity and compares it with a
//! tolerance. `inject` names a check whose measurement is pushed past its
//! tolerance, which is how the exit-code wiring is exercised.

use std::f64::consts::PI;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::control::{
    grad_lasalle, grad_psi, init_on_constraint, lasalle_potential, project_tangent, psi,
    ConstraintSpec, FreeMotion, Friction, NormalForce,
};
use crate::dynamics::{energy_rate_residual, simulate, JointState, SimConfig};
use crate::geometry::{
    christoffel_closed_form, christoffel_oracle, flat, metric_at, sharp, ChartPoint, Covector,
    RobotParams, TangentVector, ORACLE_STEP,
};
use crate::harness::{builtin, builtin_names, check_contract, run, write_json};
use crate::kinematics::{
    singularity_margin, tool_jacobian, tool_position, workspace_contains, WorkspaceRegion,
};
use crate::Result;

pub const MODULES: [&str; 5] = ["geometry", "kinematics", "dynamics", "control", "harness"];

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub module: &'static str,
    pub name: &'static str,
    pub observed: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct VerifyOptions {
    /// Restrict the run to one module.
    pub module: Option<String>,
    /// Name of a check to force into failure.
    pub inject: Option<String>,
    pub seed: u64,
}

type Measure = fn(&mut StdRng) -> Result<(f64, String)>;

struct Check {
    module: &'static str,
    name: &'static str,
    tolerance: f64,
    measure: Measure,
}

const CHECKS: &[Check] = &[
    Check {
        module: "geometry",
        name: "christoffel-oracle",
        tolerance: 1e-8,
        measure: christoffel_oracle_gap,
    },
    Check {
        module: "geometry",
        name: "christoffel-cross-terms",
        tolerance: 1e-8,
        measure: christoffel_cross_terms,
    },
    Check {
        module: "geometry",
        name: "metric-positive-definite",
        tolerance: 0.0,
        measure: metric_not_pd,
    },
    Check {
        module: "geometry",
        name: "metric-inverse",
        tolerance: 1e-12,
        measure: metric_inverse_gap,
    },
    Check {
        module: "geometry",
        name: "sharp-flat",
        tolerance: 1e-12,
        measure: sharp_flat_gap,
    },
    Check {
        module: "kinematics",
        name: "jacobian-determinant",
        tolerance: 1e-12,
        measure: det_identity_gap,
    },
    Check {
        module: "kinematics",
        name: "workspace-membership",
        tolerance: 0.0,
        measure: tool_outside_count,
    },
    Check {
        module: "kinematics",
        name: "singular-set",
        tolerance: 1e-15,
        measure: singular_set_margin,
    },
    Check {
        module: "dynamics",
        name: "free-energy-drift",
        tolerance: 1e-6,
        measure: free_energy_drift,
    },
    Check {
        module: "dynamics",
        name: "friction-energy-rate",
        tolerance: 1e-5,
        measure: friction_energy_rate,
    },
    Check {
        module: "dynamics",
        name: "rk4-order",
        tolerance: 0.3,
        measure: rk4_order_gap,
    },
    Check {
        module: "dynamics",
        name: "time-reversibility",
        tolerance: 1e-6,
        measure: reversibility_gap,
    },
    Check {
        module: "control",
        name: "gradient-oracles",
        tolerance: 1e-7,
        measure: gradient_oracle_gap,
    },
    Check {
        module: "control",
        name: "tangent-projection",
        tolerance: 1e-12,
        measure: projection_normal_part,
    },
    Check {
        module: "control",
        name: "constraint-invariance",
        tolerance: 1e-6,
        measure: constraint_drift,
    },
    Check {
        module: "control",
        name: "normal-force-uniqueness",
        tolerance: 1.0,
        measure: lambda_uniqueness,
    },
    Check {
        module: "harness",
        name: "builtin-contracts",
        tolerance: 0.0,
        measure: builtin_contract_failures,
    },
    Check {
        module: "harness",
        name: "builtin-energy-theorem",
        tolerance: 1e-5,
        measure: builtin_energy_residual,
    },
    Check {
        module: "harness",
        name: "export-determinism",
        tolerance: 0.0,
        measure: export_mismatch,
    },
];

pub fn check_names() -> impl Iterator<Item = &'static str> {
    CHECKS.iter().map(|c| c.name)
}

/// Run the suite. A check that errors out counts as failed.
pub fn run_checks(opts: &VerifyOptions) -> Vec<CheckResult> {
    CHECKS
        .iter()
        .filter(|c| opts.module.as_deref().is_none_or(|m| m == c.module))
        .map(|c| {
            let mut rng = StdRng::seed_from_u64(opts.seed);
            let (mut observed, detail) = match (c.measure)(&mut rng) {
                Ok(v) => v,
                Err(e) => (f64::INFINITY, format!("error: {e}")),
            };
            if opts.inject.as_deref() == Some(c.name) {
                observed += 1.0 + 2.0 * c.tolerance;
            }
            CheckResult {
                module: c.module,
                name: c.name,
                observed,
                tolerance: c.tolerance,
                passed: observed <= c.tolerance,
                detail,
            }
        })
        .collect()
}

fn point(rng: &mut StdRng) -> ChartPoint {
    ChartPoint::new(rng.gen_range(-PI..PI), rng.gen_range(-PI..PI))
}

fn vector(rng: &mut StdRng, scale: f64) -> TangentVector {
    TangentVector::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
}

fn christoffel_oracle_gap(rng: &mut StdRng) -> Result<(f64, String)> {
    let params = RobotParams::default();
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let q = point(rng);
        let closed = christoffel_closed_form(&params, q)?;
        let oracle = christoffel_oracle(|x| metric_at(&params, x), q, ORACLE_STEP)?;
        worst = worst.max(closed.max_abs_diff(&oracle));
    }
    Ok((worst, "200 points".into()))
}

fn christoffel_cross_terms(rng: &mut StdRng) -> Result<(f64, String)> {
    let params = RobotParams::default();
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let oracle = christoffel_oracle(|x| metric_at(&params, x), point(rng), ORACLE_STEP)?;
        for k in 0..2 {
            worst = worst.max(oracle.get(k, 0, 1).abs());
        }
    }
    Ok((worst, "oracle cross symbols".into()))
}

fn random_params(rng: &mut StdRng) -> RobotParams {
    let m1 = rng.gen_range(0.1..10.0);
    let m2 = rng.gen_range(0.1..10.0);
    let l1 = rng.gen_range(0.05..2.0);
    let l2 = rng.gen_range(0.05..2.0);
    RobotParams {
        m1,
        m2,
        l1,
        l2,
        j1: m1 * l1 * l1 / 12.0,
        j2: m2 * l2 * l2 / 12.0,
    }
}

fn metric_not_pd(rng: &mut StdRng) -> Result<(f64, String)> {
    let mut bad = 0;
    for _ in 0..500 {
        let params = random_params(rng);
        if !metric_at(&params, point(rng)).is_positive_definite() {
            bad += 1;
        }
    }
    Ok((bad as f64, "non-PD metrics out of 500".into()))
}

fn metric_inverse_gap(rng: &mut StdRng) -> Result<(f64, String)> {
    let params = RobotParams::default();
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let g = metric_at(&params, point(rng));
        let inv = g.inverse()?;
        for i in 0..2 {
            for j in 0..2 {
                let entry = g.entry(i, 0) * inv[0][j] + g.entry(i, 1) * inv[1][j];
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((entry - target).abs());
            }
        }
    }
    Ok((worst, "max |G G^-1 - I|".into()))
}

fn sharp_flat_gap(rng: &mut StdRng) -> Result<(f64, String)> {
    let params = RobotParams::default();
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let g = metric_at(&params, point(rng));
        let v = vector(rng, 5.0);
        let back = sharp(&g, flat(&g, v))?;
        worst = worst.max((back - v).max_abs() / v.max_abs().max(1.0));
        let p = Covector::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        let down = flat(&g, sharp(&g, p)?);
        worst = worst.max((down.p1 - p.p1).abs().max((down.p2 - p.p2).abs()) / 5.0);
    }
    Ok((worst, "relative round-trip error".into()))
}

fn det_identity_gap(rng: &mut StdRng) -> Result<(f64, String)> {
    let params = RobotParams::default();
    let scale = params.l1 * params.l2;
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let q = point(rng);
        let det = tool_jacobian(&params, q).det();
        worst = worst.max((det - scale * (q.theta2 - q.theta1).sin()).abs() / scale);
    }
    Ok((worst, "relative to l1*l2".into()))
}

fn tool_outside_count(rng: &mut StdRng) -> Result<(f64, String)> {
    let mut outside = 0;
    for _ in 0..1000 {
        let params = random_params(rng);
        let p = tool_position(&params, point(rng));
        if workspace_contains(&params, p) == WorkspaceRegion::Outside {
            outside += 1;
        }
    }
    Ok((outside as f64, "tool points outside the annulus".into()))
}

fn singular_set_margin(rng: &mut StdRng) -> Result<(f64, String)> {
    let params = RobotParams::default();
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let t = rng.gen_range(-PI..PI);
        worst = worst
            .max(singularity_margin(&params, ChartPoint::new(t, t)))
            .max(singularity_margin(&params, ChartPoint::new(t, t + PI)));
    }
    Ok((worst, "margin on theta2 = theta1 (mod pi)".into()))
}

fn free_energy_drift(rng: &mut StdRng) -> Result<(f64, String)> {
    let params = RobotParams::default();
    let cfg = SimConfig {
        duration: 2.0,
        ..SimConfig::default()
    };
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let traj = simulate(
            &params,
            JointState::new(point(rng), vector(rng, 3.0)),
            &FreeMotion,
            &cfg,
        )?;
        let e0 = traj.samples[0].energy.total;
        for s in &traj.samples {
            worst = worst.max((s.energy.total - e0).abs() / e0);
        }
    }
    Ok((worst, "relative drift, 3 runs of 2 s".into()))
}

fn friction_energy_rate(rng: &mut StdRng) -> Result<(f64, String)> {
    let params = RobotParams::default();
    let cfg = SimConfig {
        duration: 2.0,
        ..SimConfig::default()
    };
    let traj = simulate(
        &params,
        JointState::new(point(rng), vector(rng, 3.0)),
        &Friction { k: 2.0 },
        &cfg,
    )?;
    Ok((energy_rate_residual(&traj), "|dE/dt + k|v|^2|".into()))
}

fn rk4_order_gap(_: &mut StdRng) -> Result<(f64, String)> {
    let params = RobotParams::default();
    let init = JointState::new(ChartPoint::new(0.3, 1.2), TangentVector::new(1.5, -1.0));
    let end = |dt: f64| -> Result<JointState> {
        let cfg = SimConfig {
            dt,
            duration: 2.0,
            ..SimConfig::default()
        };
        Ok(simulate(&params, init, &FreeMotion, &cfg)?
            .samples
            .last()
            .unwrap()
            .state)
    };
    let dt = 0.005;
    let reference = end(dt / 100.0)?;
    let err = |s: JointState| {
        (s.q.theta1 - reference.q.theta1)
            .abs()
            .max((s.q.theta2 - reference.q.theta2).abs())
            .max((s.v - reference.v).max_abs())
    };
    let order = (err(end(dt)?) / err(end(dt / 2.0)?)).log2();
    Ok(((order - 4.0).abs(), format!("observed order {order:.3}")))
}

fn reversibility_gap(rng: &mut StdRng) -> Result<(f64, String)> {
    let params = RobotParams::default();
    let cfg = SimConfig {
        duration: 1.0,
        ..SimConfig::default()
    };
    let start = JointState::new(point(rng), vector(rng, 2.0));
    let there = simulate(&params, start, &FreeMotion, &cfg)?
        .samples
        .last()
        .unwrap()
        .state;
    let back = simulate(
        &params,
        JointState::new(there.q, -there.v),
        &FreeMotion,
        &cfg,
    )?
    .samples
    .last()
    .unwrap()
    .state;
    let gap = (back.q.theta1 - start.q.theta1)
        .abs()
        .max((back.q.theta2 - start.q.theta2).abs())
        .max((back.v + start.v).max_abs());
    Ok((gap, "forward 1 s then reversed".into()))
}

fn fd_gradient(
    params: &RobotParams,
    f: impl Fn(ChartPoint) -> f64,
    q: ChartPoint,
) -> Result<TangentVector> {
    let h = 1e-3;
    let mut d = [0.0; 2];
    for (i, slot) in d.iter_mut().enumerate() {
        let e = TangentVector::basis(i);
        let at = |s: f64| f(q.displaced(e, s));
        *slot = (at(-2.0 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2.0 * h)) / (12.0 * h);
    }
    sharp(&metric_at(params, q), Covector::new(d[0], d[1]))
}

fn gradient_oracle_gap(rng: &mut StdRng) -> Result<(f64, String)> {
    let params = RobotParams::default();
    let c = ConstraintSpec::ellipse(0.3, 0.6);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let q = point(rng);
        let x_d = crate::ToolPoint::new(rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8));
        let fd = fd_gradient(&params, |x| lasalle_potential(&params, x, x_d, 2.0), q)?;
        worst = worst.max((grad_lasalle(&params, q, x_d, 2.0)? - fd).max_abs());
        let fd = fd_gradient(&params, |x| psi(&params, x, &c), q)?;
        worst = worst.max((grad_psi(&params, q, &c)? - fd).max_abs());
    }
    Ok((worst, "grad V and grad psi vs finite differences".into()))
}

fn projection_normal_part(rng: &mut StdRng) -> Result<(f64, String)> {
    let params = RobotParams::default();
    let c = ConstraintSpec::ellipse(0.3, 0.6);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let q = point(rng);
        let grad = grad_psi(&params, q, &c)?;
        let g = metric_at(&params, q);
        let w = vector(rng, 2.0);
        let par = project_tangent(&params, q, w, &c, 0.0)?;
        worst = worst.max(g.inner(par, grad).abs() / (g.norm(grad) * g.norm(w)));
    }
    Ok((worst, "relative g(w_par, grad psi)".into()))
}

fn constrained_start(rng: &mut StdRng, c: &ConstraintSpec) -> Result<JointState> {
    let params = RobotParams::default();
    let s = init_on_constraint(
        &params,
        ChartPoint::new(PI / 2.0, PI / 2.0 - 0.5),
        vector(rng, 1.0),
        c,
    )?;
    let speed = metric_at(&params, s.q).norm(s.v);
    Ok(JointState::new(s.q, (0.5 / speed) * s.v))
}

fn max_psi_of(start: JointState, controller: &NormalForce, duration: f64) -> Result<f64> {
    let params = RobotParams::default();
    let cfg = SimConfig {
        duration,
        ..SimConfig::default()
    };
    let traj = simulate(&params, start, controller, &cfg)?;
    Ok(traj
        .samples
        .iter()
        .map(|s| psi(&params, s.state.q, &controller.constraint).abs())
        .fold(0.0, f64::max))
}

fn constraint_drift(rng: &mut StdRng) -> Result<(f64, String)> {
    let c = ConstraintSpec::ellipse(0.3, 0.6);
    let start = constrained_start(rng, &c)?;
    Ok((
        max_psi_of(start, &NormalForce::new(c, 1e-28), 2.0)?,
        "max |psi| over 2 s".into(),
    ))
}

fn lambda_uniqueness(rng: &mut StdRng) -> Result<(f64, String)> {
    let c = ConstraintSpec::ellipse(0.3, 0.6);
    let start = constrained_start(rng, &c)?;
    let exact = NormalForce::new(c, 1e-28);
    let base = max_psi_of(start, &exact, 2.0)?;
    let bumped = max_psi_of(
        start,
        &NormalForce {
            lambda_scale: 1.0 + 1e-3,
            ..exact
        },
        2.0,
    )?;
    let ratio = bumped / base.max(f64::MIN_POSITIVE);
    Ok((
        10.0 / ratio,
        format!("perturbed/exact drift ratio {ratio:.2e}, need >= 10"),
    ))
}

fn builtin_contract_failures(_: &mut StdRng) -> Result<(f64, String)> {
    let mut failures = Vec::new();
    for name in builtin_names() {
        let scenario = builtin(name)?;
        let (_, metrics) = run(&scenario)?;
        for check in check_contract(&scenario.contract, &metrics) {
            if !check.passed {
                let observed = check
                    .observed
                    .map_or("n/a".to_string(), |o| format!("{o:.3e}"));
                failures.push(format!(
                    "{name}.{} = {observed} (limit {:e})",
                    check.name, check.limit
                ));
            }
        }
    }
    let detail = if failures.is_empty() {
        "all contracts met".to_string()
    } else {
        failures.join("; ")
    };
    Ok((failures.len() as f64, detail))
}

/// Energy theorem on the built-ins, sampled every step at a quarter of the
/// scenario step.
fn builtin_energy_residual(_: &mut StdRng) -> Result<(f64, String)> {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for name in builtin_names() {
        let mut scenario = builtin(name)?;
        scenario.dt /= 4.0;
        scenario.stride = 1;
        let (traj, _) = run(&scenario)?;
        let r = energy_rate_residual(&traj);
        parts.push(format!("{name} {r:.1e}"));
        worst = worst.max(r);
    }
    Ok((worst, parts.join(", ")))
}

fn export_mismatch(_: &mut StdRng) -> Result<(f64, String)> {
    let scenario = builtin("paper-sim-1")?;
    let mut bytes = Vec::new();
    for _ in 0..2 {
        let (traj, metrics) = run(&scenario)?;
        let mut buf = Vec::new();
        write_json(&traj, &metrics, &mut buf)?;
        bytes.push(buf);
    }
    Ok((
        (bytes[0] != bytes[1]) as u8 as f64,
        "two JSON exports of paper-sim-1".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_unique_and_modules_known() {
        let mut names: Vec<_> = check_names().collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), CHECKS.len());
        assert!(CHECKS.iter().all(|c| MODULES.contains(&c.module)));
    }

    #[test]
    fn geometry_suite_passes_and_injection_flips_it() {
        let opts = VerifyOptions {
            module: Some("geometry".into()),
            ..Default::default()
        };
        assert!(run_checks(&opts).iter().all(|r| r.passed));
        let injected = VerifyOptions {
            inject: Some("sharp-flat".into()),
            ..opts
        };
        let results = run_checks(&injected);
        let failed: Vec<_> = results
            .iter()
            .filter(|r| !r.passed)
            .map(|r| r.name)
            .collect();
        assert_eq!(failed, ["sharp-flat"]);
    }
}
