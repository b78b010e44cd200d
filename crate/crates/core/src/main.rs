use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use geoarm::geometry::{
    christoffel_closed_form, christoffel_oracle, metric_at, ChartPoint, RobotParams, ORACLE_STEP,
};
use geoarm::harness::verify::{check_names, run_checks, VerifyOptions, MODULES};
use geoarm::harness::{check_contract, export, resolve, run, ExportFormat, RunMetrics};
use geoarm::kinematics::singularity_map;

#[derive(Parser)]
#[command(
    name = "geoarm",
    version,
    about = "Two-link arm dynamics and geometric regulators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or a built-in scenario.
    Simulate {
        scenario: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Defaults to the extension of --out, then csv.
        #[arg(long)]
        format: Option<ExportFormat>,
    },
    /// Compare closed-form Christoffel symbols with the finite-difference oracle.
    ChristoffelCheck {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Tabulate |det Dx| over the chart.
    SingularityMap {
        #[arg(long, default_value_t = 101, value_parser = clap::value_parser!(u32).range(2..))]
        grid: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the invariant suite.
    Verify {
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(MODULES))]
        module: Option<String>,
        /// Force the named check to fail.
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(check_names()))]
        inject: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate {
            scenario,
            out,
            format,
        } => simulate(&scenario, out.as_deref(), format),
        Command::ChristoffelCheck { n, tol, seed } => christoffel_check(n, tol, seed),
        Command::SingularityMap { grid, out } => singularity(grid as usize, out.as_deref()),
        Command::Verify {
            module,
            inject,
            seed,
        } => Ok(verify(VerifyOptions {
            module,
            inject,
            seed,
        })),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&*e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(1)
        }
    }
}

type Outcome = Result<bool, Box<dyn std::error::Error>>;

fn simulate(name: &str, out: Option<&Path>, format: Option<ExportFormat>) -> Outcome {
    let scenario = resolve(name)?;
    let (traj, metrics) = run(&scenario)?;
    if let Some(path) = out {
        let format = format.unwrap_or_else(|| match path.extension().and_then(|e| e.to_str()) {
            Some("json") => ExportFormat::Json,
            _ => ExportFormat::Csv,
        });
        export(&traj, &metrics, format, path)?;
        println!("wrote {} samples to {}", traj.len(), path.display());
    }
    print_metrics(&scenario.name, &metrics);
    for check in check_contract(&scenario.contract, &metrics) {
        println!(
            "  contract {:<18} {} (observed {}, limit {:e})",
            check.name,
            if check.passed { "ok" } else { "VIOLATED" },
            check
                .observed
                .map_or("n/a".to_string(), |o| format!("{o:.3e}")),
            check.limit
        );
    }
    Ok(true)
}

fn opt(v: Option<f64>) -> String {
    v.map_or("n/a".to_string(), |v| format!("{v:.3e}"))
}

fn print_metrics(name: &str, m: &RunMetrics) {
    println!("scenario {name}");
    println!("  final tool error     {}", opt(m.final_tool_error));
    println!("  final speed |v|_g    {:.3e}", m.final_speed);
    println!("  settling time        {}", opt(m.settling_time));
    println!("  max |psi|            {}", opt(m.max_psi));
    println!("  min singular margin  {:.3e}", m.min_sing_margin);
    println!("  near-singular samples {}", m.near_singular_samples);
    println!("  energy residual      {:.3e}", m.energy_residual);
    if let Some(steps) = m.newton_steps {
        println!("  newton steps         {steps}");
    }
    let spurious: Vec<_> = m
        .constraint_critical_points
        .iter()
        .filter(|c| !c.is_target())
        .collect();
    if !spurious.is_empty() {
        println!(
            "  warning: V restricted to the constraint has {} critical points other than x_d:",
            spurious.len()
        );
        for c in spurious {
            println!(
                "    ({:.4}, {:.4}) at distance {:.4}",
                c.point.x, c.point.y, c.distance
            );
        }
    }
}

fn christoffel_check(n: usize, tol: f64, seed: u64) -> Outcome {
    let params = RobotParams::default();
    let mut rng = StdRng::seed_from_u64(seed);
    let pi = std::f64::consts::PI;
    let (mut worst, mut at) = (0.0f64, ChartPoint::default());
    for _ in 0..n {
        let q = ChartPoint::new(rng.gen_range(-pi..pi), rng.gen_range(-pi..pi));
        let closed = christoffel_closed_form(&params, q)?;
        let oracle = christoffel_oracle(|x| metric_at(&params, x), q, ORACLE_STEP)?;
        let mut diff = closed.max_abs_diff(&oracle);
        for k in 0..2 {
            diff = diff.max(oracle.get(k, 0, 1).abs());
        }
        if diff > worst {
            worst = diff;
            at = q;
        }
    }
    let ok = worst <= tol;
    println!(
        "{} points, max deviation {worst:.3e} at ({:.4}, {:.4}), tol {tol:e}: {}",
        n,
        at.theta1,
        at.theta2,
        if ok { "ok" } else { "VIOLATED" }
    );
    Ok(ok)
}

fn singularity(grid: usize, out: Option<&Path>) -> Outcome {
    let params = RobotParams::default();
    let map = singularity_map(&params, grid);
    if let Some(path) = out {
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
        w.write_record(["theta1", "theta2", "margin"])?;
        for (row, &t2) in map.margins.iter().zip(&map.axis) {
            for (&m, &t1) in row.iter().zip(&map.axis) {
                w.write_record([t1.to_string(), t2.to_string(), m.to_string()])?;
            }
        }
        w.flush()?;
        println!("wrote {grid}x{grid} map to {}", path.display());
    }
    let singular = map.margins.iter().flatten().filter(|&&m| m < 1e-3).count();
    println!(
        "max margin {:.4e}, {singular} of {} cells below 1e-3",
        map.max(),
        grid * grid
    );
    Ok(true)
}

fn verify(opts: VerifyOptions) -> bool {
    let results = run_checks(&opts);
    let mut stdout = std::io::stdout().lock();
    for r in &results {
        let _ = writeln!(
            stdout,
            "[{}] {:<10} {:<26} {:.3e} <= {:e}  {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.module,
            r.name,
            r.observed,
            r.tolerance,
            r.detail
        );
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    let _ = writeln!(stdout, "{} checks, {failed} failed", results.len());
    failed == 0
}
