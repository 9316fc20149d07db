//! Run orchestration and serializable reports.
//!
//! [`execute_run`] drives the solver from a [`RunConfig`], streams one
//! diagnostic row per recorded state into a CSV series, and leaves a run
//! directory containing the series, a JSON run report (configuration echo,
//! conservation drifts, growth-criterion verdict), and initial/final state
//! checkpoints.  [`analyze_run`] re-reads such a directory, recomputes the
//! criterion report from the stored series — a consistency check on both the
//! writer and the reader — and emits a downsampled, plot-ready copy of the
//! series.  Because CSV rows carry shortest round-trip float formatting, a
//! re-analysis of an intact run reproduces the stored report exactly.

use std::fs::{self, File};
use std::io::{BufWriter, Write as _};
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::checkpoint;
use crate::diagnostics::{
    criterion_status, read_csv, CriterionReport, DiagnosticRecord, Recorder,
};
use crate::error::{Error, Result};
use crate::ops;
use crate::scenario::RunConfig;
use crate::solver::{self, Termination};

/// Per-record diagnostic series (CSV, one row per recorded state).
pub const SERIES_FILE: &str = "series.csv";
/// Run report (JSON).
pub const REPORT_FILE: &str = "run.json";
/// Downsampled series written by analysis (CSV, same columns).
pub const PLOT_FILE: &str = "plot.csv";
pub const CHECKPOINT_INITIAL: &str = "checkpoint_initial.json";
pub const CHECKPOINT_FINAL: &str = "checkpoint_final.json";
/// Row budget for the plot series.
pub const PLOT_MAX_ROWS: usize = 512;

/// Everything a run leaves behind besides the raw series and checkpoints.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub config: RunConfig,
    pub termination: Termination,
    /// Time steps taken.
    pub steps: usize,
    /// Diagnostic rows written.
    pub records: usize,
    pub final_time: f64,
    /// `‖√ρ u‖²_{L²}` at start and end, and its relative drift.
    pub energy_initial: f64,
    pub energy_final: f64,
    pub energy_drift: f64,
    /// Relative drift of the density extremes (transport preserves them).
    pub rho_range_drift: f64,
    /// `‖div u‖_∞` of the final state.
    pub final_div_sup: f64,
    pub wall_seconds: f64,
    pub criterion: CriterionReport,
}

fn rel(delta: f64, scale: f64) -> f64 {
    delta.abs() / scale.abs().max(f64::MIN_POSITIVE)
}

/// Run the scenario described by `config` and populate `out_dir`.
pub fn execute_run(config: &RunConfig, out_dir: &Path) -> Result<RunReport> {
    config.validate()?;
    fs::create_dir_all(out_dir)?;
    let initial = config.initial_state()?;
    checkpoint::save(&initial, &out_dir.join(CHECKPOINT_INITIAL))?;
    let recorder = Recorder::new(*initial.grid());

    let start = Instant::now();
    let mut rows: Vec<DiagnosticRecord> = Vec::new();
    let mut writer = BufWriter::new(File::create(out_dir.join(SERIES_FILE))?);
    writeln!(writer, "{}", DiagnosticRecord::CSV_HEADER)?;
    let summary = {
        let mut sink = |state: &solver::FlowState| -> Result<()> {
            let record = recorder.record(state);
            writeln!(writer, "{}", record.to_csv_row())?;
            rows.push(record);
            Ok(())
        };
        solver::run(initial, &config.solver, config.horizon, &mut sink)?
    };
    writer.flush()?;
    let wall_seconds = start.elapsed().as_secs_f64();

    let last = &summary.final_state;
    checkpoint::save(last, &out_dir.join(CHECKPOINT_FINAL))?;
    let criterion = criterion_status(&rows, config.criterion, config.growth_threshold)?;
    // Drifts are measured against the first recorded state — what the solver
    // actually evolved, after its ingest projection.
    let first = rows.first().expect("the sink sees the initial state");
    let report = RunReport {
        config: config.clone(),
        termination: summary.termination,
        steps: summary.steps,
        records: summary.records,
        final_time: last.t,
        energy_initial: first.energy,
        energy_final: last.energy(),
        energy_drift: rel(last.energy() - first.energy, first.energy),
        rho_range_drift: rel(last.rho.min() - first.rho_min, first.rho_max)
            .max(rel(last.rho.max() - first.rho_max, first.rho_max)),
        final_div_sup: ops::divergence(&last.u).linf(),
        wall_seconds,
        criterion,
    };
    fs::write(
        out_dir.join(REPORT_FILE),
        serde_json::to_string_pretty(&report).expect("run reports serialize"),
    )?;
    Ok(report)
}

/// Componentwise distance between two criterion reports; infinite when the
/// mode or the verdict differ.
pub fn criterion_deviation(a: &CriterionReport, b: &CriterionReport) -> f64 {
    if a.mode != b.mode || a.classification != b.classification {
        return f64::INFINITY;
    }
    [
        a.horizon - b.horizon,
        a.k_integral - b.k_integral,
        a.critical_sum_integral - b.critical_sum_integral,
        a.critical_sup - b.critical_sup,
        a.lipschitz_integral - b.lipschitz_integral,
        a.growth_threshold - b.growth_threshold,
        a.log_slope - b.log_slope,
    ]
    .into_iter()
    .fold(0.0f64, |m, d| m.max(d.abs()))
}

/// Outcome of re-analyzing a run directory.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnalyzeReport {
    /// The stored run report.
    pub run: RunReport,
    /// Criterion report recomputed from the stored series.
    pub recomputed: CriterionReport,
    /// `criterion_deviation` between stored and recomputed reports.
    pub deviation: f64,
    /// Rows written to the plot series.
    pub plot_rows: usize,
}

/// Re-read `dir`, recompute the criterion report from the series, and write
/// the downsampled plot series.  Missing or truncated artifacts are data
/// errors that name what is absent.
pub fn analyze_run(dir: &Path) -> Result<AnalyzeReport> {
    let report_path = dir.join(REPORT_FILE);
    let text = fs::read_to_string(&report_path).map_err(|e| {
        Error::Data(format!("run report {}: {e}", report_path.display()))
    })?;
    let run: RunReport = serde_json::from_str(&text)
        .map_err(|e| Error::Data(format!("run report {}: {e}", report_path.display())))?;

    let series_path = dir.join(SERIES_FILE);
    let series = read_csv(&series_path)?;
    if series.is_empty() {
        return Err(Error::Data(format!(
            "series {} holds no records",
            series_path.display()
        )));
    }
    let last_t = series.last().unwrap().t;
    let slack = 1e-9 * run.final_time.abs().max(1.0);
    if last_t < run.final_time - slack {
        return Err(Error::Data(format!(
            "series {} is truncated: ends at t = {last_t}, run report covers up to \
             t = {}; missing range ({last_t}, {}]",
            series_path.display(),
            run.final_time,
            run.final_time
        )));
    }

    let recomputed = criterion_status(&series, run.config.criterion, run.config.growth_threshold)?;
    let deviation = criterion_deviation(&run.criterion, &recomputed);

    // Evenly strided downsample that always keeps the final row.
    let stride = series.len().div_ceil(PLOT_MAX_ROWS).max(1);
    let mut writer = BufWriter::new(File::create(dir.join(PLOT_FILE))?);
    writeln!(writer, "{}", DiagnosticRecord::CSV_HEADER)?;
    let mut plot_rows = 0usize;
    for (i, record) in series.iter().enumerate() {
        if i % stride == 0 || i == series.len() - 1 {
            writeln!(writer, "{}", record.to_csv_row())?;
            plot_rows += 1;
        }
    }
    writer.flush()?;

    Ok(AnalyzeReport {
        run,
        recomputed,
        deviation,
        plot_rows,
    })
}

/// One named check inside a verification suite.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Aggregated result of one verification suite.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub wall_seconds: f64,
    pub checks: Vec<CheckOutcome>,
}

impl SuiteReport {
    pub fn new(suite: &str) -> SuiteReport {
        SuiteReport {
            suite: suite.into(),
            passed: true,
            wall_seconds: 0.0,
            checks: Vec::new(),
        }
    }

    /// Record one check; the suite fails if any check fails.
    pub fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.passed &= passed;
        self.checks.push(CheckOutcome {
            name: name.into(),
            passed,
            detail,
        });
    }

    /// Human-readable per-check lines.
    pub fn lines(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let mark = if c.passed { "ok  " } else { "FAIL" };
            out.push_str(&format!("  {mark} {} — {}\n", c.name, c.detail));
        }
        out
    }
}
