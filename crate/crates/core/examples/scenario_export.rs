//! Load a scenario from TOML, run it with the built-ins in a batch, check the
//! contracts and export every run as CSV and JSON.

use geoarm::harness::{
    builtin, builtin_names, check_contract, export, load_scenario, run_batch, ExportFormat,
};

const CUSTOM: &str = r#"
name = "swing-to-side"
controller = "tool_regulator"
initial = [0.4, 1.4, 0.0, 0.0]
x_d = [0.5, -0.3]
k1 = 100.0
k = 20.0
duration = 6.0

max_final_tool_error = 1e-3
max_final_speed = 1e-3
"#;

fn main() -> geoarm::Result<()> {
    let mut scenarios = vec![load_scenario(CUSTOM)?];
    for name in builtin_names() {
        scenarios.push(builtin(name)?);
    }
    let dir = std::env::temp_dir().join("geoarm-export");
    std::fs::create_dir_all(&dir)?;

    for (scenario, result) in scenarios.iter().zip(run_batch(&scenarios)) {
        let (traj, metrics) = result?;
        for (format, ext) in [(ExportFormat::Csv, "csv"), (ExportFormat::Json, "json")] {
            export(
                &traj,
                &metrics,
                format,
                dir.join(format!("{}.{ext}", scenario.name)),
            )?;
        }
        let checks = check_contract(&scenario.contract, &metrics);
        let failed: Vec<_> = checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        println!(
            "{:<18} {} samples, contract {}",
            scenario.name,
            traj.len(),
            if failed.is_empty() {
                "met".to_string()
            } else {
                format!("violated: {}", failed.join(", "))
            }
        );
    }
    println!("exports in {}", dir.display());
    Ok(())
}
