use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::run::RunMetrics;
use crate::dynamics::{Sample, Trajectory};
use crate::Result;

pub const CSV_COLUMNS: [&str; 18] = [
    "t",
    "theta1",
    "theta2",
    "theta1_wrapped",
    "theta2_wrapped",
    "v1",
    "v2",
    "tool_x",
    "tool_y",
    "u1",
    "u2",
    "lambda",
    "psi",
    "kinetic",
    "potential",
    "total_energy",
    "power",
    "sing_margin",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

impl FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            other => Err(format!(
                "unknown export format `{other}` (expected csv or json)"
            )),
        }
    }
}

/// One exported sample; field order is the CSV column order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExportRow {
    pub t: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub theta1_wrapped: f64,
    pub theta2_wrapped: f64,
    pub v1: f64,
    pub v2: f64,
    pub tool_x: f64,
    pub tool_y: f64,
    pub u1: f64,
    pub u2: f64,
    pub lambda: Option<f64>,
    pub psi: Option<f64>,
    pub kinetic: f64,
    pub potential: f64,
    pub total_energy: f64,
    pub power: f64,
    pub sing_margin: f64,
}

impl From<&Sample> for ExportRow {
    fn from(s: &Sample) -> Self {
        let wrapped = s.wrapped();
        ExportRow {
            t: s.t,
            theta1: s.state.q.theta1,
            theta2: s.state.q.theta2,
            theta1_wrapped: wrapped.theta1,
            theta2_wrapped: wrapped.theta2,
            v1: s.state.v.v1,
            v2: s.state.v.v2,
            tool_x: s.tool.x,
            tool_y: s.tool.y,
            u1: s.control.u.v1,
            u2: s.control.u.v2,
            lambda: s.control.lambda,
            psi: s.control.psi_residual,
            kinetic: s.energy.kinetic,
            potential: s.energy.potential,
            total_energy: s.energy.total,
            power: s.energy.power,
            sing_margin: s.sing_margin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportDoc {
    pub columns: Vec<String>,
    pub samples: Vec<ExportRow>,
    pub metrics: RunMetrics,
}

impl ExportDoc {
    pub fn new(traj: &Trajectory, metrics: &RunMetrics) -> Self {
        ExportDoc {
            columns: CSV_COLUMNS.iter().map(|c| c.to_string()).collect(),
            samples: traj.samples.iter().map(ExportRow::from).collect(),
            metrics: metrics.clone(),
        }
    }
}

pub fn write_csv<W: Write>(traj: &Trajectory, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for s in &traj.samples {
        w.serialize(ExportRow::from(s))?;
    }
    if traj.is_empty() {
        w.write_record(CSV_COLUMNS)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(traj: &Trajectory, metrics: &RunMetrics, writer: W) -> Result<()> {
    serde_json::to_writer_pretty(writer, &ExportDoc::new(traj, metrics))?;
    Ok(())
}

pub fn read_json(path: impl AsRef<Path>) -> Result<ExportDoc> {
    let file = File::open(path)?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}

/// Write a trajectory to `path`. CSV carries the samples only; JSON adds the metrics.
pub fn export(
    traj: &Trajectory,
    metrics: &RunMetrics,
    format: ExportFormat,
    path: impl AsRef<Path>,
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    match format {
        ExportFormat::Csv => write_csv(traj, &mut out)?,
        ExportFormat::Json => write_json(traj, metrics, &mut out)?,
    }
    out.flush()?;
    Ok(())
}
