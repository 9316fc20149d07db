//! Named verification suites behind the command-line `verify` subcommand.
//!
//! Each suite runs a fixed set of checks with pinned tolerances on seeded
//! data and returns a [`SuiteReport`]; a suite passes only if every check
//! does.  The suites are coarse smoke tests of whole subsystems — spectral
//! calculus, dyadic analysis, product splitting, transport estimates, and the
//! derived-field identities — meant to be run on an installed binary; the
//! fine-grained cases live in the unit and integration tests.

use std::str::FromStr;
use std::time::Instant;

use crate::ensemble::{self, random_div_free, random_scalar, sample_seed};
use crate::error::{Error, Result};
use crate::field::{dealias_field, ScalarField, VectorField};
use crate::grid::TorusGrid;
use crate::lp::verify::{
    thresholds, verify_bernstein, verify_embedding, verify_interpolation, BernsteinCase,
    EnsembleSpec, InterpolationForm, SupportShape,
};
use crate::lp::{besov_norm, BesovSpec, DyadicPartition};
use crate::ops;
use crate::paraproduct::{
    bony_decompose, estimate_continuity_constant, remainder, ContinuityEstimate,
    CONTINUITY_THRESHOLD,
};
use crate::report::SuiteReport;
use crate::solver::{self, derived, FlowState, SolverConfig};
use crate::transport::{
    transport_solve, verify_exponential_estimate, verify_linear_growth, verify_lp_estimate,
    TransportConfig, TransportProblem, VelocityModel,
};

/// Exact-calculus tolerance: identities that hold to rounding error.
const EXACT_TOL: f64 = 1e-12;
/// Tolerance for derivative/recombination identities with `O(k)` or `O(k²)`
/// amplification of rounding noise.
const AMPLIFIED_TOL: f64 = 1e-10;
/// Sup-norm tolerance for the derived-field identities on random states.
const IDENTITY_TOL: f64 = 1e-8;
/// Residual ceiling for the first-order commutator check.
const COMMUTATOR_TOL: f64 = 1e-4;
/// Ceiling for the empirical transport-growth constant.
const EXPONENTIAL_CONSTANT_CEILING: f64 = 16.0;
/// Allowed spread of linear-growth ratios across the amplitude ramp.
const LINEAR_SPREAD_CEILING: f64 = 4.0;

/// Which verification suite to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SuiteKind {
    Spectral,
    Besov,
    Paraproduct,
    Transport,
    Identities,
}

impl SuiteKind {
    pub const ALL: [SuiteKind; 5] = [
        SuiteKind::Spectral,
        SuiteKind::Besov,
        SuiteKind::Paraproduct,
        SuiteKind::Transport,
        SuiteKind::Identities,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SuiteKind::Spectral => "spectral",
            SuiteKind::Besov => "besov",
            SuiteKind::Paraproduct => "paraproduct",
            SuiteKind::Transport => "transport",
            SuiteKind::Identities => "identities",
        }
    }
}

impl FromStr for SuiteKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<SuiteKind> {
        SuiteKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "unknown suite {s:?}; expected one of spectral, besov, paraproduct, \
                     transport, identities"
                ))
            })
    }
}

/// Suite parameters. Defaults match the documented sizes; smaller grids are
/// useful for quick spot checks.
#[derive(Clone, Copy, Debug)]
pub struct SuiteOptions {
    /// Grid points per side for the resolution-dependent checks.
    pub n: usize,
    /// Base seed of all random draws.
    pub seed: u64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { n: 128, seed: 2026 }
    }
}

/// Run one suite and time it.
pub fn run_suite(kind: SuiteKind, opts: &SuiteOptions) -> Result<SuiteReport> {
    let grid = TorusGrid::new(opts.n)?;
    let start = Instant::now();
    let mut report = match kind {
        SuiteKind::Spectral => spectral_suite(grid, opts.seed)?,
        SuiteKind::Besov => besov_suite(grid, opts.seed)?,
        SuiteKind::Paraproduct => paraproduct_suite(grid, opts.seed)?,
        SuiteKind::Transport => transport_suite(grid, opts.seed)?,
        SuiteKind::Identities => identities_suite(grid, opts.seed)?,
    };
    report.wall_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

fn check_le(suite: &mut SuiteReport, name: &str, measured: f64, bound: f64) {
    suite.check(
        name,
        measured.is_finite() && measured <= bound,
        format!("measured {measured:.3e} ≤ {bound:.1e}"),
    );
}

fn shear(grid: TorusGrid, amplitude: f64) -> VectorField {
    VectorField::from_fns(grid, move |_, y| amplitude * y.sin(), |_, _| 0.0)
}

/// Random state with density bounded in `[1 − a, 1 + a]`, `a = 0.3`, and a
/// band-limited divergence-free velocity.
fn random_state(grid: TorusGrid, seed: u64) -> FlowState {
    let w = random_scalar(grid, seed);
    let mut rho = ScalarField::constant(grid, 1.0);
    rho.add_scaled(&w, 0.3 / w.linf());
    let u = random_div_free(grid, seed ^ 0x5EED, ensemble::DEFAULT_BAND, 1.0);
    FlowState::new(rho, u).expect("bounded density")
}

fn spectral_suite(grid: TorusGrid, seed: u64) -> Result<SuiteReport> {
    let mut suite = SuiteReport::new("spectral");

    // Derivatives of a closed-form mode.
    let f = ScalarField::from_fn(grid, |x, y| (3.0 * x).sin() * (5.0 * y).cos());
    let dx_exact = ScalarField::from_fn(grid, |x, y| 3.0 * (3.0 * x).cos() * (5.0 * y).cos());
    let dy_exact = ScalarField::from_fn(grid, |x, y| -5.0 * (3.0 * x).sin() * (5.0 * y).sin());
    let err = ops::derivative(&f, 0)
        .linf_distance(&dx_exact)
        .max(ops::derivative(&f, 1).linf_distance(&dy_exact));
    check_le(&mut suite, "derivative_closed_form", err, AMPLIFIED_TOL);

    // Transform round trip and the norm identity connecting both sides.
    let g = random_scalar(grid, sample_seed(seed, 0));
    let spectrum = g.to_spectrum();
    check_le(
        &mut suite,
        "fft_round_trip",
        spectrum.to_field().linf_distance(&g),
        EXACT_TOL,
    );
    let l2sq = g.l2() * g.l2();
    let parseval = (l2sq - 4.0 * std::f64::consts::PI.powi(2) * spectrum.energy()).abs() / l2sq;
    check_le(&mut suite, "norm_identity", parseval, EXACT_TOL);

    // Projection: idempotent, kills gradients, output divergence-free.
    let raw = VectorField::new(
        random_scalar(grid, sample_seed(seed, 1)),
        random_scalar(grid, sample_seed(seed, 2)),
    );
    let projected = ops::leray_project(&raw);
    check_le(
        &mut suite,
        "projection_idempotent",
        ops::leray_project(&projected).linf_distance(&projected),
        EXACT_TOL,
    );
    check_le(
        &mut suite,
        "projection_kills_gradients",
        ops::leray_project(&ops::gradient(&g)).linf(),
        AMPLIFIED_TOL,
    );
    check_le(
        &mut suite,
        "projected_divergence",
        ops::divergence(&projected).linf(),
        AMPLIFIED_TOL,
    );

    // Inverse Laplacian solves its equation.
    let w = ops::inv_neg_laplacian(&g);
    let mut lap = ops::derivative(&ops::derivative(&w, 0), 0);
    lap.add_scaled(&ops::derivative(&ops::derivative(&w, 1), 1), 1.0);
    let mut residual = g.clone();
    residual.add_scaled(&lap, 1.0);
    let shifted = residual.mean();
    let worst = residual.map(|v| v - shifted).linf();
    check_le(&mut suite, "inverse_laplacian_residual", worst, AMPLIFIED_TOL);

    // Dealiasing truncates to the 2/3 cube and is then idempotent.
    let cut = grid.dealias_cut() as i64;
    let trimmed = dealias_field(&g);
    suite.check(
        "dealias_band",
        trimmed.to_spectrum().band_max(1e-13) <= cut,
        format!(
            "band after truncation {} ≤ cut {cut}",
            trimmed.to_spectrum().band_max(1e-13)
        ),
    );
    check_le(
        &mut suite,
        "dealias_idempotent",
        dealias_field(&trimmed).linf_distance(&trimmed),
        EXACT_TOL,
    );
    Ok(suite)
}

fn besov_suite(grid: TorusGrid, seed: u64) -> Result<SuiteReport> {
    let mut suite = SuiteReport::new("besov");
    let part = DyadicPartition::new(grid);
    let ens = EnsembleSpec::with_samples(16, seed);

    check_le(
        &mut suite,
        "partition_of_unity",
        part.partition_defect(),
        EXACT_TOL,
    );
    check_le(
        &mut suite,
        "block_disjointness",
        part.disjointness_defect(),
        EXACT_TOL,
    );

    // Blocks recombine to the field.
    let f = random_scalar(grid, sample_seed(seed, 100));
    let blocks = part.block_fields(&f)?;
    let mut sum = ScalarField::zeros(grid);
    for b in &blocks {
        sum.add_scaled(b, 1.0);
    }
    check_le(
        &mut suite,
        "block_recombination",
        sum.linf_distance(&f),
        AMPLIFIED_TOL,
    );

    // Norm homogeneity: scaling by 2 commutes with every floating-point step.
    let spec = BesovSpec::B0_INF_1;
    let mut doubled = f.clone();
    doubled.scale(2.0);
    let ratio = besov_norm(&part, &doubled, &spec)? / besov_norm(&part, &f, &spec)?;
    check_le(&mut suite, "norm_homogeneity", (ratio - 2.0).abs(), 1e-14);

    // Band-limited derivative bounds, both support shapes.
    let shell = BernsteinCase {
        shape: SupportShape::Shell,
        lambda: 8.0,
        order: 1,
        p: f64::INFINITY,
        q: f64::INFINITY,
    };
    let rep = verify_bernstein(grid, &shell, &ens, thresholds::BERNSTEIN)?;
    suite.check(
        "bernstein_shell",
        rep.pass,
        format!(
            "worst upper {:.3} / lower {:.3} within ×{}",
            rep.worst_upper,
            rep.worst_lower.unwrap_or(f64::NAN),
            rep.threshold
        ),
    );
    let ball = BernsteinCase {
        shape: SupportShape::Ball,
        lambda: 8.0,
        order: 1,
        p: 2.0,
        q: f64::INFINITY,
    };
    let rep = verify_bernstein(grid, &ball, &ens, thresholds::BERNSTEIN)?;
    suite.check(
        "bernstein_ball",
        rep.pass,
        format!("worst upper {:.3} within ×{}", rep.worst_upper, rep.threshold),
    );

    // The three interpolation bounds.
    for (form, threshold) in [
        (
            InterpolationForm::Classic { eps: 0.5 },
            thresholds::INTERPOLATION_CLASSIC,
        ),
        (
            InterpolationForm::PowerMean { alpha: 2.0 },
            thresholds::INTERPOLATION_POWER_MEAN,
        ),
        (
            InterpolationForm::GradientLog { alpha: 2.0 },
            thresholds::INTERPOLATION_GRADIENT_LOG,
        ),
    ] {
        let rep = verify_interpolation(&part, &form, &ens, threshold)?;
        suite.check(
            &rep.inequality.clone(),
            rep.pass,
            format!("worst ratio {:.3} within ×{}", rep.worst_ratio, rep.threshold),
        );
    }

    // Refined embedding of a log-weighted sup space into the summable one.
    let from = BesovSpec::with_log(0.0, f64::INFINITY, 2.0, 0.75);
    let rep = verify_embedding(&part, &from, &BesovSpec::B0_INF_1, &ens, thresholds::EMBEDDING)?;
    suite.check(
        "embedding_log_refined",
        rep.pass,
        format!("worst ratio {:.3} within ×{}", rep.worst_ratio, rep.threshold),
    );
    Ok(suite)
}

fn paraproduct_suite(grid: TorusGrid, seed: u64) -> Result<SuiteReport> {
    let mut suite = SuiteReport::new("paraproduct");
    let part = DyadicPartition::new(grid);

    // Bony splitting reconstructs the product, pairwise.
    let mut worst = 0.0f64;
    for i in 0..10 {
        let u = random_scalar(grid, sample_seed(seed, 2 * i));
        let v = random_scalar(grid, sample_seed(seed, 2 * i + 1));
        let triple = bony_decompose(&part, &u, &v)?;
        worst = worst.max(
            triple
                .sum()
                .linf_distance(&crate::field::mul_dealiased(&u, &v)),
        );
    }
    check_le(&mut suite, "bony_reconstruction", worst, AMPLIFIED_TOL);

    // The remainder grouping is symmetric by construction — identically so.
    let u = random_scalar(grid, sample_seed(seed, 40));
    let v = random_scalar(grid, sample_seed(seed, 41));
    let asym = remainder(&part, &u, &v)?.linf_distance(&remainder(&part, &v, &u)?);
    suite.check(
        "remainder_symmetry",
        asym == 0.0,
        format!("‖R(u,v) − R(v,u)‖_∞ = {asym:.1e} (must be exactly 0)"),
    );

    // Operator-norm ratios of the five continuity estimates.
    let ens = EnsembleSpec::with_samples(12, seed);
    let b1 = BesovSpec::new(1.0, f64::INFINITY, 1.0);
    let estimates = [
        ContinuityEstimate::ParaLinf { target: b1 },
        ContinuityEstimate::ParaNegative {
            u_space: BesovSpec::new(-0.5, f64::INFINITY, f64::INFINITY),
            v_space: b1,
        },
        ContinuityEstimate::RemainderPositive {
            u_space: BesovSpec::new(0.5, f64::INFINITY, 2.0),
            v_space: BesovSpec::new(0.5, f64::INFINITY, 2.0),
        },
        ContinuityEstimate::RemainderZero {
            u_space: BesovSpec::new(0.5, f64::INFINITY, 2.0),
            v_space: BesovSpec::new(-0.5, f64::INFINITY, 2.0),
        },
        ContinuityEstimate::Tame { space: b1 },
    ];
    for est in &estimates {
        let rep = estimate_continuity_constant(&part, est, &ens, CONTINUITY_THRESHOLD)?;
        suite.check(
            &rep.inequality.clone(),
            rep.pass,
            format!("worst ratio {:.3} within ×{}", rep.worst_ratio, rep.threshold),
        );
    }
    Ok(suite)
}

fn transport_suite(grid: TorusGrid, seed: u64) -> Result<SuiteReport> {
    let mut suite = SuiteReport::new("transport");

    // A divergence-free flow preserves Lᵖ bounds of a forced probe.
    let v = random_div_free(grid, sample_seed(seed, 0), ensemble::DEFAULT_BAND, 1.0);
    let f0 = random_scalar(grid, sample_seed(seed, 1));
    let forcing = random_scalar(grid, sample_seed(seed, 2));
    let problem = TransportProblem::new(VelocityModel::Steady(v), forcing, f0, 0.5)?;
    let traj = transport_solve(&problem, &TransportConfig::default())?;
    for p in [2.0, f64::INFINITY] {
        let rep = verify_lp_estimate(&traj, p)?;
        suite.check(
            &format!("lp_margin_p_{p}"),
            rep.pass,
            format!(
                "margin {:.3e} ≥ −{:.0e}·rhs (rhs {:.3e})",
                rep.margin,
                crate::transport::LP_MARGIN_TOL,
                rep.rhs_at_min
            ),
        );
    }

    // Exponential envelope: the empirical constant is finite and modest.
    let f0 = ScalarField::from_fn(grid, |x, _| (4.0 * x).sin());
    let problem = TransportProblem::unforced(VelocityModel::Steady(shear(grid, 1.0)), f0, 1.0)?;
    let traj = transport_solve(&problem, &TransportConfig::default())?;
    let rep = verify_exponential_estimate(&traj, &BesovSpec::new(1.0, f64::INFINITY, 1.0))?;
    check_le(
        &mut suite,
        "exponential_constant",
        rep.c_emp_sup,
        EXPONENTIAL_CONSTANT_CEILING,
    );

    // Linear growth in the zero-regularity space: an amplitude ramp spreads
    // the exponential envelope by e⁷ while the bound's ratio stays flat.
    let small = TorusGrid::new(64)?;
    let f0 = ScalarField::from_fn(small, |x, _| x.sin());
    let mut ratios = Vec::new();
    let mut envelopes = Vec::new();
    for amplitude in [1.0, 2.0, 4.0, 8.0] {
        let problem = TransportProblem::unforced(
            VelocityModel::Steady(shear(small, amplitude)),
            f0.clone(),
            1.0,
        )?;
        let traj = transport_solve(&problem, &TransportConfig::default())?;
        let rep = verify_linear_growth(&traj, f64::INFINITY, 1.0)?;
        ratios.push(rep.ratio);
        envelopes.push(rep.lipschitz_integral);
    }
    let spread = ratios.iter().cloned().fold(0.0f64, f64::max)
        / ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    suite.check(
        "linear_growth_ramp",
        spread.is_finite()
            && spread <= LINEAR_SPREAD_CEILING
            && envelopes[3] - envelopes[0] >= 4.0,
        format!(
            "ratio spread ×{spread:.2} ≤ ×{LINEAR_SPREAD_CEILING}, envelope span {:.1}",
            envelopes[3] - envelopes[0]
        ),
    );

    // First-order commutation of the directional derivative with the material
    // derivative, co-evolved against the flow solver.
    let residual = commutator_residual()?;
    check_le(&mut suite, "commutator_residual", residual, COMMUTATOR_TOL);
    Ok(suite)
}

/// Max sup-residual of `∂ₓ(∂ₜ + u·∇)f − (∂ₜ + u·∇)∂ₓf` over a short
/// lock-stepped run of the flow solver (direction field) and the transport
/// harness (probe), as centered difference quotients.
fn commutator_residual() -> Result<f64> {
    let g = TorusGrid::new(64)?;
    let dt = 1e-3;
    let horizon = 5e-3;
    let rho = ScalarField::from_fn(g, |_, y| 1.0 + 0.3 * y.sin());
    let u = shear(g, 1.0);
    let state = FlowState::new(rho, u.clone())?.with_co_evolution();
    let cfg = SolverConfig {
        dt_override: Some(dt),
        co_evolve: true,
        cadence: 1,
        ..SolverConfig::default()
    };
    let mut states = Vec::new();
    solver::run(state, &cfg, horizon, &mut |s| {
        states.push(s.clone());
        Ok(())
    })?;

    let f0 = ScalarField::from_fn(g, |x, y| (x + y).sin());
    let problem = TransportProblem::unforced(VelocityModel::Steady(u.clone()), f0, horizon)?;
    let config = TransportConfig {
        dt_override: Some(dt),
        samples: states.len(),
        ..TransportConfig::default()
    };
    let traj = transport_solve(&problem, &config)?;

    let directional = |x: &VectorField, f: &ScalarField| -> ScalarField {
        dealias_field(&x.dot_nodal(&ops::gradient(f)))
    };
    let material = |a: &ScalarField, b: &ScalarField, step: f64| -> ScalarField {
        let mut rate = b.clone();
        rate.add_scaled(a, -1.0);
        rate.scale(1.0 / step);
        let mut mid = a.clone();
        mid.scale(0.5);
        mid.add_scaled(b, 0.5);
        rate.add_scaled(&solver::advect(&u, &mid, true), 1.0);
        rate
    };
    let mut worst = 0.0f64;
    for k in 0..states.len() - 1 {
        let step = traj.times[k + 1] - traj.times[k];
        let x_now = &states[k].co.as_ref().expect("co-evolved").x_tilde;
        let x_next = &states[k + 1].co.as_ref().expect("co-evolved").x_tilde;
        let mut x_mid = x_now.clone();
        x_mid.scale(0.5);
        x_mid.add_scaled(x_next, 0.5);
        let mf = material(&traj.fields[k], &traj.fields[k + 1], step);
        let term1 = directional(&x_mid, &mf);
        let h_now = directional(x_now, &traj.fields[k]);
        let h_next = directional(x_next, &traj.fields[k + 1]);
        let term2 = material(&h_now, &h_next, step);
        worst = worst.max(term1.linf_distance(&term2));
    }
    Ok(worst)
}

fn identities_suite(grid: TorusGrid, seed: u64) -> Result<SuiteReport> {
    let mut suite = SuiteReport::new("identities");
    let mut eta_worst = 0.0f64;
    let mut helmholtz_worst = 0.0f64;
    let mut grad_worst = 0.0f64;
    for i in 0..20 {
        let state = random_state(grid, sample_seed(seed, i));
        eta_worst = eta_worst.max(derived::eta_identity_residual(&state.rho, &state.u));
        helmholtz_worst = helmholtz_worst.max(derived::helmholtz_momentum(&state.rho, &state.u).2);
        grad_worst = grad_worst.max(derived::reconstruct_grad_u(&state.rho, &state.u).1);
    }
    check_le(&mut suite, "momentum_curl_identity", eta_worst, IDENTITY_TOL);
    check_le(
        &mut suite,
        "momentum_decomposition",
        helmholtz_worst,
        IDENTITY_TOL,
    );
    check_le(
        &mut suite,
        "velocity_gradient_reconstruction",
        grad_worst,
        IDENTITY_TOL,
    );
    Ok(suite)
}
