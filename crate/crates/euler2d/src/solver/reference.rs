//! Constant-density reference path.
//!
//! With `ρ ≡ 1` the system reduces to the classical incompressible Euler
//! equations, whose pressure is the one-shot inverse Laplacian
//! `Π = (−Δ)⁻¹(∇u:∇u)` — no fixed-point iteration. This module advances that
//! reduced system with the same stepping policy (CFL rule, RK4 tableau,
//! post-step Leray projection, dealiasing) as the full solver, providing an
//! independent trajectory that homogeneous runs of the full solver must
//! reproduce.

use crate::error::Result;
use crate::field::{self, ScalarField, VectorField};
use crate::ops;

use super::{pressure, SolverConfig, VELOCITY_FLOOR};

/// One-shot constant-density pressure.
pub fn reference_pressure(u: &VectorField, dealias: bool) -> ScalarField {
    let g = pressure::velocity_self_stretch(u, dealias);
    ops::inv_neg_laplacian(&g)
}

fn rhs(u: &VectorField, dealias: bool) -> VectorField {
    let dealias_or = |f: &ScalarField| {
        if dealias {
            field::dealias_field(f)
        } else {
            f.clone()
        }
    };
    let grad_p = ops::gradient(&reference_pressure(u, dealias));
    let mut dx = dealias_or(&u.dot_nodal(&ops::gradient(&u.x)));
    dx.scale(-1.0);
    dx.add_scaled(&dealias_or(&grad_p.x), -1.0);
    let mut dy = dealias_or(&u.dot_nodal(&ops::gradient(&u.y)));
    dy.scale(-1.0);
    dy.add_scaled(&dealias_or(&grad_p.y), -1.0);
    VectorField::new(dx, dy)
}

/// One RK4 step of size `dt` with post-step projection.
pub fn step_by(u: &VectorField, cfg: &SolverConfig, dt: f64) -> VectorField {
    let k1 = rhs(u, cfg.dealias);
    let mut s = u.clone();
    s.add_scaled(&k1, 0.5 * dt);
    let k2 = rhs(&s, cfg.dealias);
    let mut s = u.clone();
    s.add_scaled(&k2, 0.5 * dt);
    let k3 = rhs(&s, cfg.dealias);
    let mut s = u.clone();
    s.add_scaled(&k3, dt);
    let k4 = rhs(&s, cfg.dealias);

    let mut slope = k1;
    slope.add_scaled(&k2, 2.0);
    slope.add_scaled(&k3, 2.0);
    slope.add_scaled(&k4, 1.0);
    let mut next = u.clone();
    next.add_scaled(&slope, dt / 6.0);
    ops::leray_project(&next)
}

/// Advance to `horizon` under the same CFL policy as the full solver;
/// returns the final velocity and the step count.
pub fn run(u0: &VectorField, cfg: &SolverConfig, horizon: f64) -> Result<(VectorField, usize)> {
    cfg.validate()?;
    let mut u = ops::leray_project(u0);
    let h = u.grid().h();
    let mut t = 0.0;
    let mut steps = 0usize;
    let slack = 1e-12 * horizon.max(1.0);
    while t < horizon - slack {
        let dt = match cfg.dt_override {
            Some(dt) => dt,
            None => cfg.cfl * h / u.linf().max(VELOCITY_FLOOR),
        }
        .min(horizon - t);
        u = step_by(&u, cfg, dt);
        t += dt;
        steps += 1;
    }
    Ok((u, steps))
}
