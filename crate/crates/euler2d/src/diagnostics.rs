//! Per-state monitoring of the quantities driving the continuation criteria.
//!
//! A [`Recorder`] turns a flow state into a [`DiagnosticRecord`]: energy,
//! density bounds, sup and dyadic norms of the direction-field derivatives
//! `∂ₓu` and `∂ₓ|u|²`, the momentum curl `η`, the structural identity
//! residuals, and the two singular-operator sups `S₁`, `S₂`.  Series of
//! records feed [`criterion_status`], which accumulates the criterion
//! integrals (trapezoid at the recording cadence) and classifies the
//! monitored quantity as bounded or growing from its last-quartile log-slope.
//! Two ratio monitors track sharper estimates empirically:
//! [`Recorder::singular_bounds`] compares `S₁`, `S₂` against their dyadic-norm
//! surrogates, and [`Recorder::log_bound_ratio`] measures the Lipschitz norm
//! of `u` against the logarithm of the high-regularity norms.
//!
//! Records never fail: a state with non-finite entries produces a record with
//! `flagged = true` so that post-blow-up output stays writable.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TorusGrid;
use crate::lp::{besov_norm, besov_norm_vec, top_block_share, BesovSpec, DyadicPartition};
use crate::ops;
use crate::solver::derived;
use crate::solver::FlowState;

/// A `B⁰_{∞,1}`-type block sum whose top block carries more than this share is
/// marked under-resolved: the grid is too small for the sum to have converged.
pub const UNDER_RESOLUTION_SHARE: f64 = 0.10;

/// Default log-slope (per unit time, over the last quartile of a series)
/// above which a criterion quantity is classified as growing.
pub const DEFAULT_GROWTH_THRESHOLD: f64 = 2.0;

/// Snapshot of every monitored quantity at one time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRecord {
    pub t: f64,
    /// Kinetic energy `h² Σ ρ|u|²`.
    pub energy: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    /// `‖∇ρ‖_∞` (componentwise sup).
    pub grad_rho_sup: f64,
    /// `‖u‖_∞` (componentwise sup).
    pub u_sup: f64,
    /// `‖∇u‖_∞` (pointwise Frobenius sup).
    pub grad_u_sup: f64,
    /// `‖∂ₓu‖_∞` with `X = ∇⊥ρ`.
    pub dx_u_sup: f64,
    /// `‖∂ₓu‖_{B⁰_{∞,1}}`.
    pub dx_u_besov: f64,
    /// `‖∂ₓ|u|²‖_{B⁰_{∞,1}}`.
    pub dx_usq_besov: f64,
    /// `‖η‖_{B⁰_{∞,1}}` for the momentum curl `η = curl(ρu)`.
    pub eta_besov: f64,
    /// `‖∇ρ‖_{B⁰_{∞,1}}`.
    pub grad_rho_besov: f64,
    /// `‖η − ρω − u·∇⊥ρ‖_∞`.
    pub eta_residual: f64,
    /// Defect of the momentum splitting into curl-recovered and
    /// gradient-recovered parts.
    pub helmholtz_residual: f64,
    /// Defect of rebuilding `∇u` from `(ρ, ρu)`.
    pub grad_u_residual: f64,
    /// `‖∇∇⊥(−Δ)⁻¹η‖_∞`.
    pub s1: f64,
    /// `‖∇²(−Δ)⁻¹(u·∇ρ)‖_∞`.
    pub s2: f64,
    /// True when any entry is non-finite (post-blow-up snapshot).
    pub flagged: bool,
    /// True when a top dyadic block carries more than
    /// [`UNDER_RESOLUTION_SHARE`] of one of the block sums.
    pub under_resolved: bool,
}

impl DiagnosticRecord {
    /// Column names of the CSV serialization, in row order.
    pub const CSV_HEADER: &'static str = "t,energy,rho_min,rho_max,grad_rho_sup,u_sup,grad_u_sup,dx_u_sup,dx_u_besov,dx_usq_besov,eta_besov,grad_rho_besov,eta_residual,helmholtz_residual,grad_u_residual,s1,s2,flagged,under_resolved";

    fn float_fields(&self) -> [f64; 17] {
        [
            self.t,
            self.energy,
            self.rho_min,
            self.rho_max,
            self.grad_rho_sup,
            self.u_sup,
            self.grad_u_sup,
            self.dx_u_sup,
            self.dx_u_besov,
            self.dx_usq_besov,
            self.eta_besov,
            self.grad_rho_besov,
            self.eta_residual,
            self.helmholtz_residual,
            self.grad_u_residual,
            self.s1,
            self.s2,
        ]
    }

    /// False when any numeric entry is non-finite.
    pub fn is_healthy(&self) -> bool {
        self.float_fields().iter().all(|v| v.is_finite())
    }

    /// One CSV row; floats use the shortest round-trip representation so a
    /// written series reads back bit-identical.
    pub fn to_csv_row(&self) -> String {
        let floats: Vec<String> = self.float_fields().iter().map(|v| format!("{v:?}")).collect();
        format!("{},{},{}", floats.join(","), self.flagged, self.under_resolved)
    }

    pub fn from_csv_row(line: &str) -> Result<DiagnosticRecord> {
        let parts: Vec<&str> = line.trim_end().split(',').collect();
        if parts.len() != 19 {
            return Err(Error::Data(format!(
                "diagnostic row has {} fields, expected 19",
                parts.len()
            )));
        }
        let mut floats = [0.0f64; 17];
        for (slot, raw) in floats.iter_mut().zip(&parts[..17]) {
            *slot = raw
                .parse()
                .map_err(|_| Error::Data(format!("bad float {raw:?} in diagnostic row")))?;
        }
        let flagged: bool = parts[17]
            .parse()
            .map_err(|_| Error::Data(format!("bad flag {:?} in diagnostic row", parts[17])))?;
        let under_resolved: bool = parts[18]
            .parse()
            .map_err(|_| Error::Data(format!("bad flag {:?} in diagnostic row", parts[18])))?;
        Ok(DiagnosticRecord {
            t: floats[0],
            energy: floats[1],
            rho_min: floats[2],
            rho_max: floats[3],
            grad_rho_sup: floats[4],
            u_sup: floats[5],
            grad_u_sup: floats[6],
            dx_u_sup: floats[7],
            dx_u_besov: floats[8],
            dx_usq_besov: floats[9],
            eta_besov: floats[10],
            grad_rho_besov: floats[11],
            eta_residual: floats[12],
            helmholtz_residual: floats[13],
            grad_u_residual: floats[14],
            s1: floats[15],
            s2: floats[16],
            flagged,
            under_resolved,
        })
    }
}

/// Write a series as CSV with the documented header.
pub fn write_csv(path: &Path, records: &[DiagnosticRecord]) -> Result<()> {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(DiagnosticRecord::CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.to_csv_row());
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Read a series written by [`write_csv`].
pub fn read_csv(path: &Path) -> Result<Vec<DiagnosticRecord>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == DiagnosticRecord::CSV_HEADER => {}
        other => {
            return Err(Error::Data(format!(
                "diagnostic CSV header mismatch: got {other:?}"
            )))
        }
    }
    lines.map(DiagnosticRecord::from_csv_row).collect()
}

/// Reusable recorder; owns the dyadic partition tables for its grid.
pub struct Recorder {
    part: DyadicPartition,
}

impl Recorder {
    pub fn new(grid: TorusGrid) -> Recorder {
        Recorder {
            part: DyadicPartition::new(grid),
        }
    }

    pub fn partition(&self) -> &DyadicPartition {
        &self.part
    }

    /// Compute every monitored quantity for one state.  Infallible: the fixed
    /// `B⁰_{∞,1}` spec is always admissible, and non-finite states come back
    /// with `flagged = true` rather than an error.
    pub fn record(&self, state: &FlowState) -> DiagnosticRecord {
        let b01 = BesovSpec::B0_INF_1;
        let part = &self.part;
        let rho = &state.rho;
        let u = &state.u;

        let grad_rho = ops::gradient(rho);
        let dx_u = derived::compute_dxu(state);
        let dx_usq = derived::compute_dx_usq(state);
        let eta = derived::compute_eta(rho, u);
        let (s1, s2) = derived::singular_sups(rho, u);
        let (_, _, helmholtz_residual) = derived::helmholtz_momentum(rho, u);
        let (_, grad_u_residual) = derived::reconstruct_grad_u(rho, u);

        let besov = |f: &crate::field::ScalarField| -> f64 {
            besov_norm(part, f, &b01).expect("B⁰_{∞,1} is a valid spec")
        };
        let mut under_resolved = false;
        for f in [&dx_u.x, &dx_u.y, &dx_usq, &eta, &grad_rho.x, &grad_rho.y] {
            let share = top_block_share(part, f, f64::INFINITY)
                .expect("p = ∞ block norms are always defined");
            if share > UNDER_RESOLUTION_SHARE {
                under_resolved = true;
            }
        }

        let mut record = DiagnosticRecord {
            t: state.t,
            energy: state.energy(),
            rho_min: rho.min(),
            rho_max: rho.max(),
            grad_rho_sup: grad_rho.linf(),
            u_sup: u.linf(),
            grad_u_sup: derived::grad_u_sup(u),
            dx_u_sup: dx_u.linf(),
            dx_u_besov: besov(&dx_u.x).max(besov(&dx_u.y)),
            dx_usq_besov: besov(&dx_usq),
            eta_besov: besov(&eta),
            grad_rho_besov: besov(&grad_rho.x).max(besov(&grad_rho.y)),
            eta_residual: derived::eta_identity_residual(rho, u),
            helmholtz_residual,
            grad_u_residual,
            s1,
            s2,
            flagged: false,
            under_resolved,
        };
        record.flagged = !record.is_healthy();
        record
    }

    /// Singular-operator sups next to their dyadic-norm surrogates.
    pub fn singular_bounds(&self, state: &FlowState) -> SingularBoundsReport {
        let b01 = BesovSpec::B0_INF_1;
        let (s1, s2) = derived::singular_sups(&state.rho, &state.u);
        let eta = derived::compute_eta(&state.rho, &state.u);
        let grad_rho = ops::gradient(&state.rho);
        let eta_besov = besov_norm(&self.part, &eta, &b01).expect("valid spec");
        let grad_rho_besov = besov_norm_vec(&self.part, &grad_rho, &b01).expect("valid spec");
        let u_besov = besov_norm_vec(&self.part, &state.u, &b01).expect("valid spec");
        let s1_surrogate = 1.0 + eta_besov;
        let s2_surrogate = 1.0 + grad_rho_besov + u_besov;
        SingularBoundsReport {
            s1,
            s2,
            s1_surrogate,
            s2_surrogate,
            s1_ratio: s1 / s1_surrogate,
            s2_ratio: s2 / s2_surrogate,
        }
    }

    /// Ratio of the Lipschitz norm of `u` to the logarithm of the
    /// high-regularity norms `𝒩 = ‖∇ρ‖_{B^{s−1}_{p,r}} + ‖u‖_{B^s_{p,r}}`.
    pub fn log_bound_ratio(&self, state: &FlowState, spec: &BesovSpec) -> Result<LogBoundReport> {
        lipschitz_log_admissible(spec)?;
        let lower = BesovSpec::new(spec.s - 1.0, spec.p, spec.r);
        let grad_rho = ops::gradient(&state.rho);
        let n_quantity = besov_norm_vec(&self.part, &grad_rho, &lower)?
            + besov_norm_vec(&self.part, &state.u, spec)?;
        let numerator = derived::grad_u_sup(&state.u);
        Ok(LogBoundReport {
            spec: *spec,
            numerator,
            n_quantity,
            ratio: numerator / (std::f64::consts::E + n_quantity).ln(),
        })
    }
}

/// One-shot convenience wrapper around [`Recorder::record`]; builds the
/// partition tables each call, so loops should hold a `Recorder` instead.
pub fn record(state: &FlowState) -> DiagnosticRecord {
    Recorder::new(*state.grid()).record(state)
}

/// Check the index conditions under which the log bound is stated:
/// `p ∈ [2,∞]` and either `s > 1 + 2/p` or `s = 1 + 2/p` with `r = 1`,
/// in a classical (unweighted) space.
pub fn lipschitz_log_admissible(spec: &BesovSpec) -> Result<()> {
    spec.validate()?;
    if spec.alpha != 0.0 {
        return Err(Error::Inadmissible(
            "log-bound monitor works in classical spaces (alpha = 0)".into(),
        ));
    }
    if spec.p < 2.0 {
        return Err(Error::Inadmissible(format!(
            "log-bound monitor needs p ≥ 2, got {}",
            spec.p
        )));
    }
    let inv_p = if spec.p.is_infinite() { 0.0 } else { 1.0 / spec.p };
    let critical = 1.0 + 2.0 * inv_p;
    let subcritical = spec.s > critical + 1e-12;
    let critical_case = (spec.s - critical).abs() <= 1e-12 && spec.r == 1.0;
    if !subcritical && !critical_case {
        return Err(Error::Inadmissible(format!(
            "log-bound monitor needs s > 1 + 2/p, or s = 1 + 2/p with r = 1; got s = {}, p = {}, r = {}",
            spec.s, spec.p, spec.r
        )));
    }
    Ok(())
}

/// `S₁`, `S₂` with the dyadic-norm surrogates they are controlled by.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SingularBoundsReport {
    pub s1: f64,
    pub s2: f64,
    /// `1 + ‖η‖_{B⁰_{∞,1}}`.
    pub s1_surrogate: f64,
    /// `1 + ‖∇ρ‖_{B⁰_{∞,1}} + ‖u‖_{B⁰_{∞,1}}`.
    pub s2_surrogate: f64,
    pub s1_ratio: f64,
    pub s2_ratio: f64,
}

/// Measured Lipschitz-vs-log ratio for one state.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LogBoundReport {
    pub spec: BesovSpec,
    /// `‖∇u‖_∞`.
    pub numerator: f64,
    /// `𝒩 = ‖∇ρ‖_{B^{s−1}_{p,r}} + ‖u‖_{B^s_{p,r}}`.
    pub n_quantity: f64,
    /// `‖∇u‖_∞ / log(e + 𝒩)`.
    pub ratio: f64,
}

/// Which continuation criterion a report tracks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionMode {
    /// `∫ ‖∂ₓu‖_∞ dt`.
    Subcritical,
    /// `∫ (‖∂ₓu‖_{B⁰_{∞,1}} + ‖∂ₓ|u|²‖_{B⁰_{∞,1}}) dt`.
    CriticalSum,
    /// `sup_t ‖∂ₓu‖_{B⁰_{∞,1}}`.
    CriticalSup,
}

impl CriterionMode {
    pub fn label(&self) -> &'static str {
        match self {
            CriterionMode::Subcritical => "subcritical",
            CriterionMode::CriticalSum => "critical_sum",
            CriterionMode::CriticalSup => "critical_sup",
        }
    }

    /// The per-record quantity whose growth this criterion watches.
    fn series_value(&self, r: &DiagnosticRecord) -> f64 {
        match self {
            CriterionMode::Subcritical => r.dx_u_sup,
            CriterionMode::CriticalSum => r.dx_u_besov + r.dx_usq_besov,
            CriterionMode::CriticalSup => r.dx_u_besov,
        }
    }
}

/// Bounded-vs-growing verdict for a monitored quantity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthClass {
    Bounded,
    Growing,
}

/// Criterion integrals and the growth verdict over a recorded series.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CriterionReport {
    pub mode: CriterionMode,
    /// Final time of the series.
    pub horizon: f64,
    /// `∫₀ᵀ ‖∂ₓu‖_∞ dt`.
    pub k_integral: f64,
    /// `∫₀ᵀ (‖∂ₓu‖_{B⁰_{∞,1}} + ‖∂ₓ|u|²‖_{B⁰_{∞,1}}) dt`.
    pub critical_sum_integral: f64,
    /// `sup_{t ≤ T} ‖∂ₓu‖_{B⁰_{∞,1}}`.
    pub critical_sup: f64,
    /// `∫₀ᵀ ‖∇u‖_∞ dt`.
    pub lipschitz_integral: f64,
    pub growth_threshold: f64,
    /// Log-slope of the monitored quantity over the last quartile in time.
    pub log_slope: f64,
    pub classification: GrowthClass,
}

fn trapezoid(series: &[DiagnosticRecord], value: impl Fn(&DiagnosticRecord) -> f64) -> f64 {
    let mut total = 0.0;
    for w in series.windows(2) {
        total += 0.5 * (value(&w[0]) + value(&w[1])) * (w[1].t - w[0].t);
    }
    total
}

/// Accumulate the criterion integrals over a series and classify the growth
/// of the quantity selected by `mode`.
///
/// A finite run cannot certify boundedness up to a blow-up time; the verdict
/// is a trend: the quantity is called growing when the log-slope over the last
/// quartile of the time span exceeds `growth_threshold`.
pub fn criterion_status(
    series: &[DiagnosticRecord],
    mode: CriterionMode,
    growth_threshold: f64,
) -> Result<CriterionReport> {
    if series.is_empty() {
        return Err(Error::InvalidInput("empty diagnostic series".into()));
    }
    if !growth_threshold.is_finite() {
        return Err(Error::InvalidInput(format!(
            "growth threshold must be finite, got {growth_threshold}"
        )));
    }
    for w in series.windows(2) {
        if !(w[1].t > w[0].t) {
            return Err(Error::InvalidInput(format!(
                "diagnostic series times must increase strictly: {} after {}",
                w[1].t, w[0].t
            )));
        }
    }

    let horizon = series.last().unwrap().t;
    let t0 = series[0].t;
    // Last quartile of the time span (the whole series when it is too short
    // to subdivide).
    let cut = t0 + 0.75 * (horizon - t0);
    let tail_start = series.iter().position(|r| r.t >= cut).unwrap_or(0);
    let tail_start = tail_start.min(series.len().saturating_sub(2));
    let first = &series[tail_start];
    let last = series.last().unwrap();
    let span = last.t - first.t;
    let log_slope = if span > 0.0 {
        // Floor the values so an identically-zero series has slope zero
        // instead of log(0) artifacts.
        let a = mode.series_value(first).max(f64::MIN_POSITIVE);
        let b = mode.series_value(last).max(f64::MIN_POSITIVE);
        (b.ln() - a.ln()) / span
    } else {
        0.0
    };
    let classification = if log_slope > growth_threshold {
        GrowthClass::Growing
    } else {
        GrowthClass::Bounded
    };

    Ok(CriterionReport {
        mode,
        horizon,
        k_integral: trapezoid(series, |r| r.dx_u_sup),
        critical_sum_integral: trapezoid(series, |r| r.dx_u_besov + r.dx_usq_besov),
        critical_sup: series
            .iter()
            .fold(0.0f64, |m, r| m.max(r.dx_u_besov)),
        lipschitz_integral: trapezoid(series, |r| r.grad_u_sup),
        growth_threshold,
        log_slope,
        classification,
    })
}
