//! Command-line front end: configured simulation runs, subsystem
//! verification suites, and post-hoc analysis of run directories.
//!
//! Exit codes are part of the interface:
//! * `0` — success (for `verify`: every check passed);
//! * `1` — a verification suite ran but at least one check failed;
//! * `2` — invalid configuration or command line (also used by the argument
//!   parser itself);
//! * `3` — the run ended in detected blow-up (artifacts are still written);
//! * `4` — the pressure solver diverged;
//! * `5` — missing or corrupt data (checkpoints, series, reports).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use euler2d::report::{analyze_run, execute_run};
use euler2d::scenario::RunConfig;
use euler2d::solver::Termination;
use euler2d::suites::{run_suite, SuiteKind, SuiteOptions};
use euler2d::{Error, Result};

const EXIT_CHECKS_FAILED: u8 = 1;
const EXIT_INVALID_CONFIG: u8 = 2;
const EXIT_BLOW_UP: u8 = 3;
const EXIT_PRESSURE_DIVERGENCE: u8 = 4;
const EXIT_DATA: u8 = 5;

/// Stored criterion reports must reproduce under re-analysis to this
/// componentwise tolerance.
const ANALYZE_TOL: f64 = 1e-12;

/// Environment variable holding the default root for run output directories.
const OUTPUT_ROOT_VAR: &str = "EULER2D_OUT";

#[derive(Parser)]
#[command(
    name = "euler2d",
    version,
    about = "Pseudo-spectral variable-density incompressible Euler runs \
             with dyadic-block growth diagnostics"
)]
struct Cli {
    /// Worker threads for the data-parallel kernels (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured scenario; writes the diagnostic series (CSV), the run
    /// report (JSON), and initial/final checkpoints.
    Run {
        /// JSON run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config and EULER2D_OUT).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the record cadence (steps between diagnostic rows).
        #[arg(long)]
        cadence: Option<usize>,
    },
    /// Run one verification suite with pinned tolerances.
    Verify {
        /// One of: spectral, besov, paraproduct, transport, identities.
        suite: String,
        /// Grid points per side for resolution-dependent checks.
        #[arg(long, default_value_t = 128)]
        n: usize,
        /// Base seed of the random draws.
        #[arg(long, default_value_t = 2026)]
        seed: u64,
        /// Also write the suite report as JSON to this path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-analyze a run directory: recompute the criterion report from the
    /// stored series and write a downsampled plot series.
    Analyze {
        /// Run directory produced by `run`.
        dir: PathBuf,
        /// Also write the analysis (recomputed report + deviation) as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::BlowUp { .. } | Error::TransportBlowUp { .. } => EXIT_BLOW_UP,
        Error::PressureDiverged { .. } => EXIT_PRESSURE_DIVERGENCE,
        Error::Data(_) | Error::Io(_) => EXIT_DATA,
        _ => EXIT_INVALID_CONFIG,
    }
}

fn configure_threads(threads: usize) {
    #[cfg(feature = "parallel")]
    if threads > 0 {
        // Errors only if a pool already exists, which keeps that pool — fine.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    #[cfg(not(feature = "parallel"))]
    if threads > 0 {
        eprintln!("note: built without the `parallel` feature; --threads has no effect");
    }
}

/// Output directory precedence: `--out`, then the config's `output` field,
/// then `$EULER2D_OUT/<scenario>-n<grid>-seed<seed>`, then the same under
/// `./runs`.
fn resolve_out_dir(config: &RunConfig, flag: Option<PathBuf>) -> PathBuf {
    if let Some(dir) = flag {
        return dir;
    }
    if let Some(dir) = &config.output {
        return dir.clone();
    }
    let root = std::env::var_os(OUTPUT_ROOT_VAR)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"));
    root.join(format!(
        "{}-n{}-seed{}",
        config.scenario.label(),
        config.grid,
        config.seed
    ))
}

fn cmd_run(
    config_path: &Path,
    out: Option<PathBuf>,
    seed: Option<u64>,
    cadence: Option<usize>,
) -> Result<u8> {
    let mut config = RunConfig::load(config_path)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(cadence) = cadence {
        config.solver.cadence = cadence;
    }
    let out_dir = resolve_out_dir(&config, out);
    let report = execute_run(&config, &out_dir)?;
    println!(
        "{} on {}²: {} steps, {} records to t = {:.6} in {:.1} s",
        config.scenario.label(),
        config.grid,
        report.steps,
        report.records,
        report.final_time,
        report.wall_seconds
    );
    println!(
        "energy drift {:.3e}, density-range drift {:.3e}, final ‖div u‖_∞ {:.3e}",
        report.energy_drift, report.rho_range_drift, report.final_div_sup
    );
    let c = &report.criterion;
    println!(
        "criterion [{}]: ∫‖∂ₓu‖_∞ = {:.6e}, ∫(B⁰-sums) = {:.6e}, sup = {:.6e}, \
         log-slope {:.3} → {:?}",
        c.mode.label(),
        c.k_integral,
        c.critical_sum_integral,
        c.critical_sup,
        c.log_slope,
        c.classification
    );
    println!("artifacts in {}", out_dir.display());
    match &report.termination {
        Termination::Horizon => Ok(0),
        Termination::BlowUp { t, reason } => {
            eprintln!("blow-up detected at t = {t:.6}: {reason}");
            Ok(EXIT_BLOW_UP)
        }
    }
}

fn cmd_verify(suite: &str, n: usize, seed: u64, out: Option<PathBuf>) -> Result<u8> {
    let kind: SuiteKind = suite.parse()?;
    let report = run_suite(kind, &SuiteOptions { n, seed })?;
    print!("{}", report.lines());
    println!(
        "suite {} on {n}²: {} in {:.1} s",
        report.suite,
        if report.passed { "PASS" } else { "FAIL" },
        report.wall_seconds
    );
    if let Some(path) = out {
        std::fs::write(
            &path,
            serde_json::to_string_pretty(&report).expect("suite reports serialize"),
        )?;
    }
    Ok(if report.passed { 0 } else { EXIT_CHECKS_FAILED })
}

fn cmd_analyze(dir: &Path, out: Option<PathBuf>) -> Result<u8> {
    let analysis = analyze_run(dir)?;
    println!(
        "{}: report deviation {:.3e} over {} records, plot series {} rows",
        dir.display(),
        analysis.deviation,
        analysis.run.records,
        analysis.plot_rows
    );
    let c = &analysis.recomputed;
    println!(
        "criterion [{}]: ∫‖∂ₓu‖_∞ = {:.6e}, log-slope {:.3} → {:?}",
        c.mode.label(),
        c.k_integral,
        c.log_slope,
        c.classification
    );
    if let Some(path) = out {
        std::fs::write(
            &path,
            serde_json::to_string_pretty(&analysis).expect("analyses serialize"),
        )?;
    }
    if analysis.deviation > ANALYZE_TOL {
        return Err(Error::Data(format!(
            "stored criterion report deviates from the series by {:.3e} (tolerance {ANALYZE_TOL:.0e})",
            analysis.deviation
        )));
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads(cli.threads);
    let outcome = match &cli.command {
        Command::Run {
            config,
            out,
            seed,
            cadence,
        } => cmd_run(config, out.clone(), *seed, *cadence),
        Command::Verify { suite, n, seed, out } => cmd_verify(suite, *n, *seed, out.clone()),
        Command::Analyze { dir, out } => cmd_analyze(dir, out.clone()),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
