use std::process::Command;

use geoarm::harness::{
    builtin, builtin_names, export, load_scenario, read_json, run, run_batch, write_csv,
    write_json, ExportFormat, ExportRow, CSV_COLUMNS,
};

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_geoarm"))
}

fn short(name: &str, duration: f64) -> geoarm::harness::Scenario {
    let mut s = builtin(name).unwrap();
    s.duration = duration;
    s
}

#[test]
fn csv_has_exact_header_and_row_count() {
    for (duration, stride, rows) in [(0.0, 10, 1), (0.5, 10, 51), (0.5, 7, 72), (0.25, 1, 251)] {
        let mut s = short("paper-sim-1", duration);
        s.stride = stride;
        let (traj, _) = run(&s).unwrap();
        let mut buf = Vec::new();
        write_csv(&traj, &mut buf).unwrap();
        let mut reader = csv::Reader::from_reader(buf.as_slice());
        let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
        assert_eq!(header, CSV_COLUMNS);
        assert_eq!(
            reader.records().count(),
            rows,
            "duration {duration} stride {stride}"
        );
    }
}

#[test]
fn unconstrained_rows_leave_lambda_and_psi_empty() {
    let (traj, _) = run(&short("paper-sim-1", 0.05)).unwrap();
    let mut buf = Vec::new();
    write_csv(&traj, &mut buf).unwrap();
    let mut reader = csv::Reader::from_reader(buf.as_slice());
    let record = reader.records().next().unwrap().unwrap();
    assert_eq!(&record[11], "");
    assert_eq!(&record[12], "");

    let (traj, _) = run(&short("paper-constrained", 0.05)).unwrap();
    assert!(traj.samples.iter().all(|s| s.control.lambda.is_some()));
}

#[test]
fn json_round_trip_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    let (traj, metrics) = run(&short("paper-constrained", 1.0)).unwrap();
    export(&traj, &metrics, ExportFormat::Json, &path).unwrap();
    let doc = read_json(&path).unwrap();
    assert_eq!(doc.samples.len(), traj.len());
    for (row, sample) in doc.samples.iter().zip(&traj.samples) {
        let expected = ExportRow::from(sample);
        let bits = |r: &ExportRow| {
            [
                r.t,
                r.theta1,
                r.theta2,
                r.v1,
                r.v2,
                r.u1,
                r.u2,
                r.total_energy,
                r.power,
                r.sing_margin,
            ]
            .map(f64::to_bits)
        };
        assert_eq!(bits(row), bits(&expected));
        assert_eq!(
            row.lambda.map(f64::to_bits),
            expected.lambda.map(f64::to_bits)
        );
        assert_eq!(row.psi.map(f64::to_bits), expected.psi.map(f64::to_bits));
    }
    assert_eq!(doc.metrics, metrics);
}

#[test]
fn runs_are_deterministic_and_batch_matches_sequential() {
    let scenarios: Vec<_> = builtin_names().map(|n| short(n, 2.0)).collect();
    let batch = run_batch(&scenarios);
    for (s, batched) in scenarios.iter().zip(batch) {
        let (traj_a, metrics_a) = run(s).unwrap();
        let (traj_b, metrics_b) = batched.unwrap();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        write_json(&traj_a, &metrics_a, &mut a).unwrap();
        write_json(&traj_b, &metrics_b, &mut b).unwrap();
        assert!(a == b, "{} differs between runs", s.name);
    }
}

#[test]
fn scenario_file_overrides_defaults() {
    let text = r#"
name = "short-free"
controller = "free"
initial = [0.3, -0.2, 1.0, 0.5]
duration = 0.1
stride = 5
"#;
    let s = load_scenario(text).unwrap();
    let (traj, metrics) = run(&s).unwrap();
    assert_eq!(traj.len(), 21);
    assert!(metrics.final_tool_error.is_none());
    assert!(metrics.energy_residual <= 1e-6);
}

#[test]
fn cli_simulate_writes_file_and_prints_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    let output = cli()
        .args(["simulate", "paper-sim-1", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("final tool error"));
    let rows = std::fs::read_to_string(&out).unwrap().lines().count();
    assert_eq!(rows, 1 + 1001);
}

#[test]
fn cli_simulate_reads_scenario_files_and_json_format() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("free.toml");
    std::fs::write(
        &scenario,
        "controller = \"free\"\ninitial = [0.0, 1.0, 0.5, 0.0]\nduration = 0.2\n",
    )
    .unwrap();
    let out = dir.path().join("free.out");
    let status = cli()
        .arg("simulate")
        .arg(&scenario)
        .arg("--out")
        .arg(&out)
        .args(["--format", "json"])
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(0));
    assert_eq!(read_json(&out).unwrap().samples.len(), 21);
}

#[test]
fn cli_exit_codes() {
    let code = |args: &[&str]| cli().args(args).output().unwrap().status.code();
    assert_eq!(
        code(&["christoffel-check", "--n", "1000", "--tol", "1e-8"]),
        Some(0)
    );
    assert_eq!(
        code(&["christoffel-check", "--n", "50", "--tol", "1e-30"]),
        Some(1)
    );
    assert_eq!(code(&["frobnicate"]), Some(2));
    assert_eq!(code(&[]), Some(2));
    assert_eq!(code(&["simulate"]), Some(2));
    assert_eq!(
        code(&["simulate", "paper-sim-1", "--format", "xml"]),
        Some(2)
    );
    assert_eq!(code(&["singularity-map", "--grid", "1"]), Some(2));
    assert_eq!(code(&["simulate", "no-such-scenario"]), Some(1));
}

#[test]
fn cli_verify_exit_code_follows_injected_failure() {
    let code = |args: &[&str]| cli().args(args).output().unwrap().status.code();
    for module in ["geometry", "kinematics", "dynamics", "control"] {
        assert_eq!(code(&["verify", "--module", module]), Some(0), "{module}");
    }
    assert_eq!(
        code(&[
            "verify",
            "--module",
            "geometry",
            "--inject",
            "metric-inverse"
        ]),
        Some(1)
    );
    assert_eq!(
        code(&[
            "verify",
            "--module",
            "control",
            "--inject",
            "gradient-oracles"
        ]),
        Some(1)
    );
    assert_eq!(code(&["verify", "--inject", "no-such-check"]), Some(2));
}

#[test]
fn cli_singularity_map_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("map.csv");
    let status = cli()
        .args(["singularity-map", "--grid", "9", "--out"])
        .arg(&out)
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(0));
    let mut reader = csv::Reader::from_path(&out).unwrap();
    let margins: Vec<f64> = reader
        .records()
        .map(|r| r.unwrap()[2].parse().unwrap())
        .collect();
    assert_eq!(margins.len(), 81);
    assert!(margins[0] < 1e-15);
    assert!(margins.iter().all(|&m| (0.0..=0.16 + 1e-12).contains(&m)));
}
