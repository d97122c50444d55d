//! Run artifacts: trajectory CSV, JSON report, manifest and verdict tables.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{
    detect_steady_state, saturated_fraction, tail_stats, DiagnosticsError, MonteCarloRow,
    SteadyStateReport, TailStats,
};
use crate::lti::{LtiError, LtiSystem};
use crate::scenario::{ScenarioSpec, SpecError};
use crate::solver::{integrate, uniform_grid, OutputGrid, SolverError, Trajectory};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const REPORT_FILE: &str = "report.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const VERDICT_FILE: &str = "verdicts.jsonl";

/// Tail fraction and tolerance used for the report's steady-state section.
pub const REPORT_TAIL_FRACTION: f64 = 0.2;
pub const REPORT_EPS: f64 = 1e-5;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("integration failed: {0}")]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error(transparent)]
    Lti(#[from] LtiError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

fn solver_exit_code(e: &SolverError) -> i32 {
    match e {
        SolverError::Config(_) | SolverError::Grid(_) | SolverError::Dimension { .. } => 2,
        _ => 3,
    }
}

impl HarnessError {
    /// 2 for bad arguments, 3 for integration failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Spec(_) | Self::Lti(_) => 2,
            Self::Solver(e) => solver_exit_code(e),
            Self::Diagnostics(DiagnosticsError::Solver(e)) => solver_exit_code(e),
            Self::Diagnostics(_) => 2,
            Self::Io { .. } | Self::Json { .. } | Self::Csv(_) => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Everything needed to repeat a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub scenario: ScenarioSpec,
    pub seed: Option<u64>,
}

impl RunManifest {
    pub fn simulate(scenario: ScenarioSpec) -> Self {
        Self {
            tool_version: TOOL_VERSION.into(),
            command: "simulate".into(),
            scenario,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub scenario_id: String,
    pub input_spec: String,
    pub t_span: (f64, f64),
    pub samples: usize,
    /// Absent when the span is too short for steady-state detection.
    pub steady_state: Option<SteadyStateReport>,
    pub tail_stats: Vec<TailStats>,
    /// Share of tail samples with α(y) ≥ 0.9.
    pub saturated_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub trajectory_csv_path: PathBuf,
    pub report_json_path: PathBuf,
    pub manifest_path: PathBuf,
    pub run_manifest: RunManifest,
    pub report: SimulationReport,
}

fn optional<T>(r: Result<T, DiagnosticsError>) -> Result<Option<T>, DiagnosticsError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(DiagnosticsError::InsufficientData(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn simulate(spec: &ScenarioSpec) -> Result<(Trajectory, SimulationReport), HarnessError> {
    spec.validate()?;
    let sys = spec.system()?;
    let input = spec.input()?;
    let (t0, t1) = spec.t_span;
    let grid = OutputGrid::Points(uniform_grid(t0, t1, spec.output_grid_step)?);
    let traj = integrate(&sys, &input, &spec.x0, spec.t_span, &spec.integrator, &grid)?;

    let steady_state = optional(detect_steady_state(&traj, REPORT_TAIL_FRACTION, REPORT_EPS))?;
    let mut stats = Vec::new();
    for name in &traj.columns {
        if let Some(s) = optional(tail_stats(&traj, name, REPORT_TAIL_FRACTION))? {
            stats.push(s);
        }
    }
    let saturated = optional(saturated_fraction(
        &sys,
        &input,
        &traj,
        REPORT_TAIL_FRACTION,
    ))?
    .flatten();
    let report = SimulationReport {
        scenario_id: spec.scenario_id.to_string(),
        input_spec: spec.input_spec.clone(),
        t_span: spec.t_span,
        samples: traj.len(),
        steady_state,
        tail_stats: stats,
        saturated_fraction: saturated,
    };
    Ok((traj, report))
}

/// Runs `spec` and writes the CSV, report and manifest into `out_dir`.
pub fn run_simulation(spec: &ScenarioSpec, out_dir: &Path) -> Result<RunArtifacts, HarnessError> {
    let (traj, report) = simulate(spec)?;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let manifest = RunManifest::simulate(spec.clone());
    let arts = RunArtifacts {
        trajectory_csv_path: out_dir.join(TRAJECTORY_FILE),
        report_json_path: out_dir.join(REPORT_FILE),
        manifest_path: out_dir.join(MANIFEST_FILE),
        run_manifest: manifest,
        report,
    };
    write_trajectory_csv(&traj, &arts.trajectory_csv_path)?;
    write_json(&arts.report_json_path, &arts.report)?;
    write_json(&arts.manifest_path, &arts.run_manifest)?;
    Ok(arts)
}

pub fn read_manifest(path: &Path) -> Result<RunManifest, HarnessError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| HarnessError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Repeats the run recorded in a manifest.
pub fn rerun_manifest(path: &Path, out_dir: &Path) -> Result<RunArtifacts, HarnessError> {
    let m = read_manifest(path)?;
    if m.command != "simulate" {
        return Err(HarnessError::Usage(format!(
            "manifest records command '{}', only 'simulate' can be replayed",
            m.command
        )));
    }
    run_simulation(&m.scenario, out_dir)
}

/// 17 significant digits.
fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Header `t,<layout names>`, one row per output time, LF line endings.
pub fn write_trajectory_csv(traj: &Trajectory, path: &Path) -> Result<(), HarnessError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file));
    w.write_record(std::iter::once("t").chain(traj.columns.iter().map(String::as_str)))?;
    for (t, row) in traj.times.iter().zip(&traj.states) {
        w.write_record(std::iter::once(fmt_float(*t)).chain(row.iter().map(|v| fmt_float(*v))))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| HarnessError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

/// One JSON object per line, in sample order.
pub fn write_verdict_jsonl(rows: &[MonteCarloRow], path: &Path) -> Result<(), HarnessError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for row in rows {
        let line = serde_json::to_string(row).map_err(|source| HarnessError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        writeln!(w, "{line}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreqPoint {
    pub omega: f64,
    pub magnitude: f64,
    /// Radians, in (−π, π].
    pub phase: f64,
}

/// `n` log-spaced frequencies from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, HarnessError> {
    if !(lo > 0.0 && hi > lo && lo.is_finite() && hi.is_finite()) || n < 2 {
        return Err(HarnessError::Usage(format!(
            "log grid needs 0 < lo < hi and n ≥ 2 (got {lo}, {hi}, {n})"
        )));
    }
    let (a, b) = (lo.log10(), hi.log10());
    Ok((0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)
            }
        })
        .collect())
}

pub fn frequency_response(
    filter: &LtiSystem,
    omegas: &[f64],
) -> Result<Vec<FreqPoint>, HarnessError> {
    omegas
        .iter()
        .map(|&omega| {
            if !(omega.is_finite() && omega >= 0.0) {
                return Err(HarnessError::Usage(format!(
                    "frequency must be ≥ 0, got {omega}"
                )));
            }
            let w = filter.transfer_eval(crate::lti::Complex::imag(omega))?;
            Ok(FreqPoint {
                omega,
                magnitude: w.norm(),
                phase: w.arg(),
            })
        })
        .collect()
}
