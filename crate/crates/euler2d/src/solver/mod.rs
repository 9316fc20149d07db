//! Time integration of the variable-density incompressible Euler system
//!
//! ```text
//! ∂ₜρ + u·∇ρ = 0,    ρ(∂ₜu + u·∇u) + ∇Π = 0,    div u = 0,
//! ```
//!
//! by a pseudo-spectral method: spectral derivatives, 2/3-rule dealiased
//! products, the variable-coefficient pressure solve of [`pressure`], classic
//! four-stage Runge-Kutta in time with a CFL-adaptive step, and a Leray
//! re-projection of the velocity after each full step (projection drift per
//! step is O(dt⁵), so stage consistency is untouched).
//!
//! The state optionally carries co-evolved copies of the density-gradient
//! direction field and of the momentum curl, advanced by their own transport
//! equations; these exist purely to cross-validate the derived quantities in
//! [`derived`], which remain authoritative.
//!
//! Blow-up is detected, never asserted: a non-finite field or a velocity
//! gradient above the configured ceiling stops the run and hands back the
//! last valid state.

pub mod derived;
pub mod pressure;
pub mod reference;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{self, ScalarField, VectorField};
use crate::ops;

pub use pressure::{compute_pressure, solve_elliptic, PressureSolution};

/// Instantaneous simulation state.
#[derive(Clone, Debug)]
pub struct FlowState {
    pub t: f64,
    /// Density, transported; stays within its initial bounds.
    pub rho: ScalarField,
    /// Velocity, divergence-free after every step.
    pub u: VectorField,
    /// Optional co-evolved cross-validation fields.
    pub co: Option<CoEvolved>,
}

/// Cross-validation companions: the density-gradient direction field
/// `X = ∇⊥ρ` advanced by `∂ₜX + u·∇X = X·∇u`, and the momentum curl
/// `η = curl(ρu)` advanced by `∂ₜη + u·∇η = (∇⊥ρ·∇u)·u`.
#[derive(Clone, Debug)]
pub struct CoEvolved {
    pub x_tilde: VectorField,
    pub eta_tilde: ScalarField,
}

impl FlowState {
    /// Assemble a state at `t = 0`; the velocity is Leray-projected and the
    /// density checked against vacuum.
    pub fn new(rho: ScalarField, u: VectorField) -> Result<FlowState> {
        rho.grid().ensure_same(u.grid())?;
        let min_rho = rho.min();
        if !(min_rho > 0.0) {
            return Err(Error::Vacuum { min_rho });
        }
        Ok(FlowState {
            t: 0.0,
            rho,
            u: ops::leray_project(&u),
            co: None,
        })
    }

    /// Attach co-evolved fields initialized from the derived values.
    pub fn with_co_evolution(mut self) -> FlowState {
        self.co = Some(CoEvolved {
            x_tilde: derived::compute_x(&self.rho),
            eta_tilde: derived::compute_eta(&self.rho, &self.u),
        });
        self
    }

    pub fn grid(&self) -> &crate::grid::TorusGrid {
        self.rho.grid()
    }

    /// `‖√ρ u‖²_{L²}`, the conserved energy.
    pub fn energy(&self) -> f64 {
        let h2 = self.grid().h() * self.grid().h();
        let mut sum = 0.0;
        for ((r, a), b) in self
            .rho
            .values()
            .iter()
            .zip(self.u.x.values())
            .zip(self.u.y.values())
        {
            sum += r * (a * a + b * b);
        }
        sum * h2
    }

    fn is_finite(&self) -> bool {
        self.rho.is_finite()
            && self.u.is_finite()
            && self
                .co
                .as_ref()
                .map(|c| c.x_tilde.is_finite() && c.eta_tilde.is_finite())
                .unwrap_or(true)
    }
}

/// Numerical parameters of a run. The dealiasing rule is the fixed 2/3 cube;
/// `dealias: false` switches to plain nodal products (for experiments only —
/// the identity suite assumes dealiased products).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Courant number for the adaptive step, in (0, 1].
    pub cfl: f64,
    /// Apply the 2/3 rule to every nonlinear product.
    pub dealias: bool,
    /// Relative residual target of the pressure solve.
    pub pressure_tol: f64,
    /// Iteration budget of the pressure solve.
    pub pressure_max_iter: usize,
    /// Advance the cross-validation fields alongside the state.
    pub co_evolve: bool,
    /// Fixed time step overriding the CFL rule (still clipped to the
    /// horizon); used by convergence studies.
    pub dt_override: Option<f64>,
    /// Blow-up ceiling on `‖∇u‖_{L∞}`.
    pub grad_u_ceiling: f64,
    /// Diagnostics every `cadence` steps.
    pub cadence: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            cfl: 0.4,
            dealias: true,
            pressure_tol: 1e-10,
            pressure_max_iter: 500,
            co_evolve: false,
            dt_override: None,
            grad_u_ceiling: 1e6,
            cadence: 1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "cfl must lie in (0, 1], got {}",
                self.cfl
            )));
        }
        if !(self.pressure_tol > 0.0) {
            return Err(Error::InvalidInput(format!(
                "pressure_tol must be positive, got {}",
                self.pressure_tol
            )));
        }
        if self.pressure_max_iter == 0 {
            return Err(Error::InvalidInput(
                "pressure_max_iter must be at least 1".into(),
            ));
        }
        if let Some(dt) = self.dt_override {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "dt_override must be positive and finite, got {dt}"
                )));
            }
        }
        if !(self.grad_u_ceiling > 0.0) {
            return Err(Error::InvalidInput(format!(
                "grad_u_ceiling must be positive, got {}",
                self.grad_u_ceiling
            )));
        }
        if self.cadence == 0 {
            return Err(Error::InvalidInput("cadence must be at least 1".into()));
        }
        Ok(())
    }
}

/// Floor on `‖u‖_{L∞}` in the CFL rule so a rest state still steps.
pub(crate) const VELOCITY_FLOOR: f64 = 1e-12;

/// Rates of change of all evolved fields at one Runge-Kutta stage.
struct Rates {
    rho: ScalarField,
    u: VectorField,
    co: Option<(VectorField, ScalarField)>,
}

fn maybe_dealias(f: &ScalarField, dealias: bool) -> ScalarField {
    if dealias {
        field::dealias_field(f)
    } else {
        f.clone()
    }
}

/// `u·∇f`, dealiased.
pub(crate) fn advect(u: &VectorField, f: &ScalarField, dealias: bool) -> ScalarField {
    let grad = ops::gradient(f);
    maybe_dealias(&u.dot_nodal(&grad), dealias)
}

/// Right-hand side of the evolution system at the given stage values.
fn eval_rates(
    rho: &ScalarField,
    u: &VectorField,
    co: Option<&CoEvolved>,
    cfg: &SolverConfig,
) -> Result<Rates> {
    let min_rho = rho.min();
    if !(min_rho > 0.0) {
        return Err(Error::Vacuum { min_rho });
    }
    let mut drho = advect(u, rho, cfg.dealias);
    drho.scale(-1.0);

    let sol = compute_pressure(rho, u, cfg.pressure_tol, cfg.pressure_max_iter, cfg.dealias)?;
    let grad_p = ops::gradient(&sol.pressure);
    let inv_rho = rho.map(f64::recip);
    let mut du_x = advect(u, &u.x, cfg.dealias);
    du_x.scale(-1.0);
    du_x.add_scaled(
        &maybe_dealias(&field::mul_nodal(&inv_rho, &grad_p.x), cfg.dealias),
        -1.0,
    );
    let mut du_y = advect(u, &u.y, cfg.dealias);
    du_y.scale(-1.0);
    du_y.add_scaled(
        &maybe_dealias(&field::mul_nodal(&inv_rho, &grad_p.y), cfg.dealias),
        -1.0,
    );

    let co_rates = co.map(|c| {
        // ∂ₜX = −u·∇X + X·∇u, componentwise
        let stretch = derived::directional_derivative(&c.x_tilde, u, cfg.dealias);
        let mut dx_x = advect(u, &c.x_tilde.x, cfg.dealias);
        dx_x.scale(-1.0);
        dx_x.add_scaled(&stretch.x, 1.0);
        let mut dx_y = advect(u, &c.x_tilde.y, cfg.dealias);
        dx_y.scale(-1.0);
        dx_y.add_scaled(&stretch.y, 1.0);

        // ∂ₜη = −u·∇η + (∂ₓu)·u with the derived direction field ∇⊥ρ
        let x_derived = derived::compute_x(rho);
        let dxu = derived::directional_derivative(&x_derived, u, cfg.dealias);
        let force = maybe_dealias(&dxu.dot_nodal(u), cfg.dealias);
        let mut deta = advect(u, &c.eta_tilde, cfg.dealias);
        deta.scale(-1.0);
        deta.add_scaled(&force, 1.0);

        (VectorField::new(dx_x, dx_y), deta)
    });

    Ok(Rates {
        rho: drho,
        u: VectorField::new(du_x, du_y),
        co: co_rates,
    })
}

/// `state + h·rates`, leaving `t` untouched (set by the caller).
fn advanced(state: &FlowState, rates: &Rates, h: f64) -> FlowState {
    let mut out = state.clone();
    out.rho.add_scaled(&rates.rho, h);
    out.u.add_scaled(&rates.u, h);
    if let (Some(co), Some((dx, deta))) = (out.co.as_mut(), rates.co.as_ref()) {
        co.x_tilde.add_scaled(dx, h);
        co.eta_tilde.add_scaled(deta, h);
    }
    out
}

fn accumulate(into: &mut Rates, from: &Rates, w: f64) {
    into.rho.add_scaled(&from.rho, w);
    into.u.add_scaled(&from.u, w);
    if let (Some((ix, ie)), Some((fx, fe))) = (into.co.as_mut(), from.co.as_ref()) {
        ix.add_scaled(fx, w);
        ie.add_scaled(fe, w);
    }
}

/// Time step from the CFL rule (or the override), clipped to land exactly on
/// `horizon`.
pub fn time_step(state: &FlowState, cfg: &SolverConfig, horizon: f64) -> f64 {
    let dt = match cfg.dt_override {
        Some(dt) => dt,
        None => cfg.cfl * state.grid().h() / state.u.linf().max(VELOCITY_FLOOR),
    };
    dt.min(horizon - state.t)
}

/// One Runge-Kutta step of size `dt`, followed by the Leray re-projection and
/// the blow-up checks. On detection the error carries the last valid state.
pub fn step_by(state: &FlowState, cfg: &SolverConfig, dt: f64) -> Result<FlowState> {
    let blow_up = |reason: String| Error::BlowUp {
        t: state.t,
        reason,
        last_valid: Box::new(state.clone()),
    };

    let k1 = eval_rates(&state.rho, &state.u, state.co.as_ref(), cfg)?;
    let s2 = advanced(state, &k1, 0.5 * dt);
    let k2 = eval_rates(&s2.rho, &s2.u, s2.co.as_ref(), cfg)?;
    let s3 = advanced(state, &k2, 0.5 * dt);
    let k3 = eval_rates(&s3.rho, &s3.u, s3.co.as_ref(), cfg)?;
    let s4 = advanced(state, &k3, dt);
    let k4 = eval_rates(&s4.rho, &s4.u, s4.co.as_ref(), cfg)?;

    let mut slope = k1;
    accumulate(&mut slope, &k2, 2.0);
    accumulate(&mut slope, &k3, 2.0);
    accumulate(&mut slope, &k4, 1.0);
    let mut next = advanced(state, &slope, dt / 6.0);
    next.t = state.t + dt;
    next.u = ops::leray_project(&next.u);

    if !next.is_finite() {
        return Err(blow_up("non-finite field value after step".into()));
    }
    let grad_u_sup = derived::grad_u_sup(&next.u);
    if !grad_u_sup.is_finite() || grad_u_sup > cfg.grad_u_ceiling {
        return Err(blow_up(format!(
            "velocity gradient {grad_u_sup:.3e} exceeded ceiling {:.3e}",
            cfg.grad_u_ceiling
        )));
    }
    Ok(next)
}

/// One step with the internally computed (unclipped) CFL step.
pub fn step(state: &FlowState, cfg: &SolverConfig) -> Result<FlowState> {
    let dt = time_step(state, cfg, f64::INFINITY);
    step_by(state, cfg, dt)
}

/// Why a run stopped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Termination {
    /// Reached the requested horizon.
    Horizon,
    /// Blow-up indicators fired; `t` is the last valid time.
    BlowUp { t: f64, reason: String },
}

/// Outcome of a run: the last valid state plus bookkeeping.
#[derive(Debug)]
pub struct RunSummary {
    pub final_state: FlowState,
    pub steps: usize,
    pub records: usize,
    pub termination: Termination,
}

/// Advance `initial` to `horizon`, invoking `sink` on the initial state and
/// then every `cadence`-th step (plus the final one). Blow-up detection ends
/// the run and is reported in the summary; pressure failures and invalid
/// inputs propagate as errors.
pub fn run(
    initial: FlowState,
    cfg: &SolverConfig,
    horizon: f64,
    sink: &mut dyn FnMut(&FlowState) -> Result<()>,
) -> Result<RunSummary> {
    cfg.validate()?;
    if !(horizon >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "horizon must be nonnegative, got {horizon}"
        )));
    }
    let mut state = initial;
    state.u = ops::leray_project(&state.u);
    if cfg.co_evolve && state.co.is_none() {
        state = state.with_co_evolution();
    }
    if !cfg.co_evolve {
        state.co = None;
    }

    let mut steps = 0usize;
    let mut records = 0usize;
    sink(&state)?;
    records += 1;

    // absolute slack so the loop terminates despite rounding in t += dt
    let slack = 1e-12 * horizon.max(1.0);
    while state.t < horizon - slack {
        let dt = time_step(&state, cfg, horizon);
        match step_by(&state, cfg, dt) {
            Ok(next) => {
                state = next;
                steps += 1;
                let done = state.t >= horizon - slack;
                if steps % cfg.cadence == 0 || done {
                    sink(&state)?;
                    records += 1;
                }
            }
            Err(Error::BlowUp {
                t,
                reason,
                last_valid,
            }) => {
                return Ok(RunSummary {
                    final_state: *last_valid,
                    steps,
                    records,
                    termination: Termination::BlowUp { t, reason },
                });
            }
            Err(other) => return Err(other),
        }
    }
    Ok(RunSummary {
        final_state: state,
        steps,
        records,
        termination: Termination::Horizon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TorusGrid;

    fn taylor_green(grid: TorusGrid, a: f64) -> VectorField {
        VectorField::from_fns(
            grid,
            move |x, y| -a * x.sin() * y.cos(),
            move |x, y| a * x.cos() * y.sin(),
        )
    }

    #[test]
    fn rest_state_is_a_fixed_point() {
        let grid = TorusGrid::new(32).unwrap();
        let rho = ScalarField::from_fn(grid, |x, _| 2.0 + 0.5 * x.sin());
        let state = FlowState::new(rho, VectorField::zeros(grid)).unwrap();
        let cfg = SolverConfig::default();
        let next = step_by(&state, &cfg, 0.01).unwrap();
        assert!(next.u.linf() < 1e-12);
        assert!(next.rho.linf_distance(&state.rho) < 1e-12);
    }

    #[test]
    fn stratified_rest_state_has_zero_rates() {
        let grid = TorusGrid::new(32).unwrap();
        let rho = ScalarField::from_fn(grid, |x, _| 2.0 + 0.5 * x.sin());
        let u = VectorField::zeros(grid);
        let cfg = SolverConfig::default();
        let rates = eval_rates(&rho, &u, None, &cfg).unwrap();
        assert_eq!(rates.rho.linf(), 0.0);
        assert_eq!(rates.u.linf(), 0.0);
    }

    #[test]
    fn shear_over_layered_density_is_steady() {
        // ρ and u depending on x₂ only, u pointing in x₁: every nonlinear
        // term vanishes and the state is exactly steady.
        let grid = TorusGrid::new(64).unwrap();
        let rho = ScalarField::from_fn(grid, |_, y| 1.0 + 0.3 * y.sin());
        let u = VectorField::from_fns(grid, |_, y| y.sin(), |_, _| 0.0);
        let state = FlowState::new(rho, u).unwrap();
        let cfg = SolverConfig::default();
        let mut s = state.clone();
        for _ in 0..5 {
            s = step(&s, &cfg).unwrap();
        }
        assert!(s.u.linf_distance(&state.u) < 1e-11);
        assert!(s.rho.linf_distance(&state.rho) < 1e-11);
    }

    #[test]
    fn homogeneous_vortex_conserves_energy() {
        let grid = TorusGrid::new(64).unwrap();
        let rho = ScalarField::constant(grid, 1.0);
        let state = FlowState::new(rho, taylor_green(grid, 1.0)).unwrap();
        let e0 = state.energy();
        let cfg = SolverConfig::default();
        let mut s = state;
        for _ in 0..10 {
            s = step(&s, &cfg).unwrap();
        }
        assert!(((s.energy() - e0) / e0).abs() < 1e-10);
        assert!(ops::divergence(&s.u).linf() < 1e-10);
    }

    #[test]
    fn horizon_zero_reports_initial_state_only() {
        let grid = TorusGrid::new(32).unwrap();
        let state =
            FlowState::new(ScalarField::constant(grid, 1.0), taylor_green(grid, 1.0)).unwrap();
        let mut seen = 0;
        let summary = run(state, &SolverConfig::default(), 0.0, &mut |_| {
            seen += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(summary.steps, 0);
        assert_eq!(seen, 1);
        assert_eq!(summary.termination, Termination::Horizon);
    }

    #[test]
    fn ceiling_violation_reports_blow_up_with_last_state() {
        let grid = TorusGrid::new(32).unwrap();
        let state =
            FlowState::new(ScalarField::constant(grid, 1.0), taylor_green(grid, 1.0)).unwrap();
        let cfg = SolverConfig {
            grad_u_ceiling: 1e-3, // guaranteed to trip on the first step
            ..Default::default()
        };
        let summary = run(state, &cfg, 1.0, &mut |_| Ok(())).unwrap();
        match summary.termination {
            Termination::BlowUp { t, .. } => assert_eq!(t, 0.0),
            other => panic!("expected blow-up, got {other:?}"),
        }
        assert!(summary.final_state.u.is_finite());
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        let bad_cfl = SolverConfig {
            cfl: 0.0,
            ..Default::default()
        };
        assert!(bad_cfl.validate().is_err());
        let bad_dt = SolverConfig {
            dt_override: Some(-0.1),
            ..Default::default()
        };
        assert!(bad_dt.validate().is_err());
        let bad_cadence = SolverConfig {
            cadence: 0,
            ..Default::default()
        };
        assert!(bad_cadence.validate().is_err());
    }

    #[test]
    fn fixed_steps_land_exactly_on_the_horizon() {
        let grid = TorusGrid::new(32).unwrap();
        let state =
            FlowState::new(ScalarField::constant(grid, 1.0), taylor_green(grid, 0.5)).unwrap();
        let cfg = SolverConfig {
            dt_override: Some(0.03),
            ..Default::default()
        };
        let summary = run(state, &cfg, 0.1, &mut |_| Ok(())).unwrap();
        assert!((summary.final_state.t - 0.1).abs() < 1e-12);
        assert_eq!(summary.steps, 4); // 0.03 + 0.03 + 0.03 + 0.01
    }
}
