use serde::{Deserialize, Serialize};

use super::scenario::{Contract, ControllerSpec, InitialState, Scenario};
use crate::control::{
    constrained_critical_points, init_on_constraint, project_onto_constraint, ConstrainedRegulator,
    CriticalPoint, FreeMotion, NormalForce, ToolRegulator,
};
use crate::dynamics::{
    energy_rate_residual, simulate, Controller, JointState, SimConfig, Trajectory,
};
use crate::geometry::metric_at;
use crate::{Error, Result};

/// Resolution of the critical-point scan along the constraint.
const CRITICAL_SCAN_SAMPLES: usize = 3600;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    /// ‖x(q(T)) − x_d‖, when the controller has a reference.
    pub final_tool_error: Option<f64>,
    /// |v(T)|_g.
    pub final_speed: f64,
    /// First time after which the tool error stays below the settling tolerance.
    pub settling_time: Option<f64>,
    /// max |Ψ| over the run, when a constraint is active.
    pub max_psi: Option<f64>,
    pub min_sing_margin: f64,
    /// Samples whose singularity margin fell below 1e-3.
    pub near_singular_samples: usize,
    /// Energy-theorem residual at full time resolution.
    pub energy_residual: f64,
    /// Newton steps spent projecting the initial state, if it was projected.
    pub newton_steps: Option<usize>,
    /// Critical points of V restricted to the constraint (constrained runs).
    pub constraint_critical_points: Vec<CriticalPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractCheck {
    pub name: String,
    pub limit: f64,
    pub observed: Option<f64>,
    pub passed: bool,
}

pub fn build_controller(scenario: &Scenario) -> Box<dyn Controller + Send + Sync> {
    match scenario.controller {
        ControllerSpec::Free => Box::new(FreeMotion),
        ControllerSpec::ToolRegulator { x_d, gains } => Box::new(ToolRegulator {
            x_d,
            gains,
            potential: scenario.potential,
        }),
        ControllerSpec::NormalOnly { constraint, eps1 } => {
            Box::new(NormalForce::new(constraint, eps1))
        }
        ControllerSpec::Constrained {
            x_d,
            gains,
            constraint,
        } => Box::new(ConstrainedRegulator {
            x_d,
            gains,
            constraint,
        }),
    }
}

/// The state the run starts from, with the Newton step count when projected.
pub fn initial_state(scenario: &Scenario) -> Result<(JointState, Option<usize>)> {
    match (scenario.initial, scenario.controller.constraint()) {
        (InitialState::Exact(s), _) => Ok((s, None)),
        (InitialState::Projected(guess), Some(c)) => {
            let (_, steps) = project_onto_constraint(&scenario.params, guess.q, &c)?;
            let s = init_on_constraint(&scenario.params, guess.q, guess.v, &c)?;
            Ok((s, Some(steps)))
        }
        (InitialState::Projected(_), None) => Err(Error::validation(
            "project_initial",
            "requires a constraint",
        )),
    }
}

/// Simulate a validated scenario; metrics are computed at full resolution and
/// the returned trajectory keeps every `stride`-th sample.
pub fn run(scenario: &Scenario) -> Result<(Trajectory, RunMetrics)> {
    let context = |e: Error| Error::Run {
        context: format!("scenario `{}`", scenario.name),
        source: Box::new(e),
    };
    scenario.validate().map_err(context)?;
    let (initial, newton_steps) = initial_state(scenario).map_err(context)?;
    let controller = build_controller(scenario);
    let config = SimConfig {
        dt: scenario.dt,
        duration: scenario.duration,
        stride: 1,
        potential: scenario.potential,
    };
    let full =
        simulate(&scenario.params, initial, controller.as_ref(), &config).map_err(context)?;
    let metrics = compute_metrics(scenario, &full, newton_steps);
    Ok((full.decimate(scenario.stride), metrics))
}

/// Run independent scenarios on separate threads.
pub fn run_batch(scenarios: &[Scenario]) -> Vec<Result<(Trajectory, RunMetrics)>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = scenarios
            .iter()
            .map(|s| scope.spawn(move || run(s)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scenario thread panicked"))
            .collect()
    })
}

fn compute_metrics(
    scenario: &Scenario,
    traj: &Trajectory,
    newton_steps: Option<usize>,
) -> RunMetrics {
    let params = &scenario.params;
    let last = traj
        .last()
        .expect("trajectory has at least the initial sample");
    let x_d = scenario.controller.x_d();
    let final_tool_error = x_d.map(|x_d| last.tool.distance(x_d));

    let settling_time = x_d.and_then(|x_d| {
        let tol = scenario.contract.settle_tol;
        let mut settled_from = None;
        for s in &traj.samples {
            if s.tool.distance(x_d) < tol {
                settled_from.get_or_insert(s.t);
            } else {
                settled_from = None;
            }
        }
        settled_from
    });

    let max_psi = scenario.controller.constraint().map(|_| {
        traj.samples
            .iter()
            .filter_map(|s| s.control.psi_residual)
            .map(f64::abs)
            .fold(0.0, f64::max)
    });

    let constraint_critical_points = match (scenario.controller.constraint(), x_d) {
        (Some(c), Some(x_d)) => constrained_critical_points(params, &c, x_d, CRITICAL_SCAN_SAMPLES),
        _ => Vec::new(),
    };

    RunMetrics {
        final_tool_error,
        final_speed: metric_at(params, last.state.q).norm(last.state.v),
        settling_time,
        max_psi,
        min_sing_margin: traj
            .samples
            .iter()
            .map(|s| s.sing_margin)
            .fold(f64::INFINITY, f64::min),
        near_singular_samples: traj.samples.iter().filter(|s| s.near_singular()).count(),
        energy_residual: energy_rate_residual(traj),
        newton_steps,
        constraint_critical_points,
    }
}

/// Compare metrics against the thresholds recorded in the scenario.
pub fn check_contract(contract: &Contract, metrics: &RunMetrics) -> Vec<ContractCheck> {
    let mut checks = Vec::new();
    let mut push = |name: &str, limit: Option<f64>, observed: Option<f64>| {
        if let Some(limit) = limit {
            checks.push(ContractCheck {
                name: name.to_string(),
                limit,
                observed,
                passed: observed.is_some_and(|o| o < limit),
            });
        }
    };
    push(
        "final_tool_error",
        contract.max_final_tool_error,
        metrics.final_tool_error,
    );
    push(
        "final_speed",
        contract.max_final_speed,
        Some(metrics.final_speed),
    );
    push("max_psi", contract.max_psi, metrics.max_psi);
    checks
}
