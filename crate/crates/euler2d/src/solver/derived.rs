//! Fields derived from `(ρ, u)` and the algebraic identities relating them.
//!
//! The geometric quantities driving the continuation diagnostics are the
//! density-gradient direction field `X = ∇⊥ρ`, the directional derivative
//! `∂ₓf = X·∇f`, the momentum `m = ρu` and its curl `η`. The exact relations
//!
//! ```text
//! η = ρω + u·∇⊥ρ,
//! m − mean(m) = −∇⊥(−Δ)⁻¹η − ∇(−Δ)⁻¹(u·∇ρ),
//! ∇u = −(1/ρ²)∇ρ⊗m + (1/ρ)∇m,
//! ∂ₓu·u = ½ ∂ₓ|u|²,
//! ```
//!
//! are recomputed here as residuals; they vanish to rounding for band-limited
//! states whose products stay inside the dealiasing cube, and their growth
//! flags under-resolution otherwise.
//!
//! Dealiasing convention: `m` and every advective product are dealiased; the
//! gradient reconstruction deliberately uses plain nodal products, because it
//! is a pointwise algebraic identity (divide by ρ at the nodes) rather than a
//! spectral one.

use crate::field::{self, ScalarField, VectorField};
use crate::ops;

use super::FlowState;

/// `X = ∇⊥ρ = (−∂₂ρ, ∂₁ρ)`.
pub fn compute_x(rho: &ScalarField) -> VectorField {
    ops::perp_gradient(rho)
}

/// Momentum `m = ρu`, dealiased.
pub fn compute_momentum(rho: &ScalarField, u: &VectorField) -> VectorField {
    VectorField::new(
        field::mul_dealiased(rho, &u.x),
        field::mul_dealiased(rho, &u.y),
    )
}

/// Vorticity `ω = ∂₁u² − ∂₂u¹`.
pub fn compute_vorticity(u: &VectorField) -> ScalarField {
    ops::curl2d(u)
}

/// Momentum curl `η = curl(ρu)` with dealiased momentum.
pub fn compute_eta(rho: &ScalarField, u: &VectorField) -> ScalarField {
    ops::curl2d(&compute_momentum(rho, u))
}

/// `(X·∇)u` componentwise; products dealiased when requested.
pub fn directional_derivative(x: &VectorField, u: &VectorField, dealias: bool) -> VectorField {
    let dealias_or = |f: &ScalarField| {
        if dealias {
            field::dealias_field(f)
        } else {
            f.clone()
        }
    };
    let gx = ops::gradient(&u.x);
    let gy = ops::gradient(&u.y);
    VectorField::new(dealias_or(&x.dot_nodal(&gx)), dealias_or(&x.dot_nodal(&gy)))
}

/// `∂ₓu = (∇⊥ρ·∇)u`, dealiased.
pub fn compute_dxu(state: &FlowState) -> VectorField {
    directional_derivative(&compute_x(&state.rho), &state.u, true)
}

/// `∂ₓ|u|² = ∇⊥ρ·∇(u·u)`, dealiased.
pub fn compute_dx_usq(state: &FlowState) -> ScalarField {
    let speed_sq = field::dealias_field(&state.u.dot_nodal(&state.u));
    let x = compute_x(&state.rho);
    field::dealias_field(&x.dot_nodal(&ops::gradient(&speed_sq)))
}

/// Velocity gradient tensor, `d[i][j] = ∂ᵢu^j` computed spectrally.
#[derive(Clone, Debug)]
pub struct GradU {
    /// `∂₁u¹`
    pub d11: ScalarField,
    /// `∂₂u¹`
    pub d21: ScalarField,
    /// `∂₁u²`
    pub d12: ScalarField,
    /// `∂₂u²`
    pub d22: ScalarField,
}

impl GradU {
    /// Pointwise Frobenius magnitude.
    pub fn frobenius(&self) -> ScalarField {
        let mut out = ScalarField::zeros(*self.d11.grid());
        let vals = out.values_mut();
        for i in 0..vals.len() {
            let a = self.d11.values()[i];
            let b = self.d21.values()[i];
            let c = self.d12.values()[i];
            let d = self.d22.values()[i];
            vals[i] = (a * a + b * b + c * c + d * d).sqrt();
        }
        out
    }

    /// Largest absolute entry discrepancy against another tensor.
    pub fn sup_distance(&self, other: &GradU) -> f64 {
        self.d11
            .linf_distance(&other.d11)
            .max(self.d21.linf_distance(&other.d21))
            .max(self.d12.linf_distance(&other.d12))
            .max(self.d22.linf_distance(&other.d22))
    }
}

/// Spectral velocity gradient.
pub fn grad_u(u: &VectorField) -> GradU {
    let gx = ops::gradient(&u.x);
    let gy = ops::gradient(&u.y);
    GradU {
        d11: gx.x,
        d21: gx.y,
        d12: gy.x,
        d22: gy.y,
    }
}

/// `‖∇u‖_{L∞}` (Frobenius sup), the blow-up ceiling quantity.
pub fn grad_u_sup(u: &VectorField) -> f64 {
    grad_u(u).frobenius().linf()
}

/// `‖η − ρω − u·∇⊥ρ‖_{L∞}` with consistently dealiased products.
pub fn eta_identity_residual(rho: &ScalarField, u: &VectorField) -> f64 {
    let eta = compute_eta(rho, u);
    let omega = compute_vorticity(u);
    let mut rhs = field::mul_dealiased(rho, &omega);
    let x = compute_x(rho);
    rhs.add_scaled(&field::dealias_field(&u.dot_nodal(&x)), 1.0);
    eta.linf_distance(&rhs)
}

/// Split the momentum into its divergence-free and gradient parts recovered
/// from `η` and `u·∇ρ`; returns `(solenoidal, gradient, residual)` where the
/// residual is `‖m − mean(m) − solenoidal − gradient‖_{L∞}`.
pub fn helmholtz_momentum(
    rho: &ScalarField,
    u: &VectorField,
) -> (VectorField, VectorField, f64) {
    let m = compute_momentum(rho, u);
    let eta = ops::curl2d(&m);
    let mut solenoidal = ops::perp_gradient(&ops::inv_neg_laplacian(&eta));
    solenoidal.scale(-1.0);
    let advected_rho = field::dealias_field(&u.dot_nodal(&ops::gradient(rho)));
    let mut gradient = ops::gradient(&ops::inv_neg_laplacian(&advected_rho));
    gradient.scale(-1.0);

    let mut centered = m.clone();
    centered.x.add_scaled(&ScalarField::constant(*m.grid(), m.x.mean()), -1.0);
    centered.y.add_scaled(&ScalarField::constant(*m.grid(), m.y.mean()), -1.0);
    let mut recon = solenoidal.clone();
    recon.add_scaled(&gradient, 1.0);
    let residual = centered.linf_distance(&recon);
    (solenoidal, gradient, residual)
}

/// Rebuild `∇u` from `(ρ, m)` via `∂ᵢu^j = −(1/ρ²)∂ᵢρ·m^j + (1/ρ)∂ᵢm^j`
/// with nodal products, and report the sup discrepancy against the direct
/// spectral gradient.
pub fn reconstruct_grad_u(rho: &ScalarField, u: &VectorField) -> (GradU, f64) {
    let m = VectorField::new(field::mul_nodal(rho, &u.x), field::mul_nodal(rho, &u.y));
    let grad_rho = ops::gradient(rho);
    let gmx = ops::gradient(&m.x);
    let gmy = ops::gradient(&m.y);

    let grid = *rho.grid();
    let mut d = [
        ScalarField::zeros(grid),
        ScalarField::zeros(grid),
        ScalarField::zeros(grid),
        ScalarField::zeros(grid),
    ];
    let n = grid.len();
    for i in 0..n {
        let r = rho.values()[i];
        let inv = 1.0 / r;
        let inv2 = inv * inv;
        let drx = grad_rho.x.values()[i];
        let dry = grad_rho.y.values()[i];
        d[0].values_mut()[i] = -inv2 * drx * m.x.values()[i] + inv * gmx.x.values()[i];
        d[1].values_mut()[i] = -inv2 * dry * m.x.values()[i] + inv * gmx.y.values()[i];
        d[2].values_mut()[i] = -inv2 * drx * m.y.values()[i] + inv * gmy.x.values()[i];
        d[3].values_mut()[i] = -inv2 * dry * m.y.values()[i] + inv * gmy.y.values()[i];
    }
    let [d11, d21, d12, d22] = d;
    let rebuilt = GradU { d11, d21, d12, d22 };
    let direct = grad_u(u);
    let discrepancy = rebuilt.sup_distance(&direct);
    (rebuilt, discrepancy)
}

/// Sup norms of the two singular-integral surrogates:
/// `S₁ = ‖∇∇⊥(−Δ)⁻¹η‖_{L∞}` and `S₂ = ‖∇²(−Δ)⁻¹(u·∇ρ)‖_{L∞}`
/// (Frobenius magnitude of the 2×2 tensors).
pub fn singular_sups(rho: &ScalarField, u: &VectorField) -> (f64, f64) {
    let eta = compute_eta(rho, u);
    let phi = ops::inv_neg_laplacian(&eta);
    let s1 = tensor_sup(&ops::perp_gradient(&phi));

    let advected_rho = field::dealias_field(&u.dot_nodal(&ops::gradient(rho)));
    let psi = ops::inv_neg_laplacian(&advected_rho);
    let s2 = tensor_sup(&ops::gradient(&psi));
    (s1, s2)
}

/// Frobenius sup of `∇v` for a vector field `v`.
fn tensor_sup(v: &VectorField) -> f64 {
    grad_u_sup(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble;
    use crate::grid::TorusGrid;

    fn random_state(grid: TorusGrid, seed: u64) -> (ScalarField, VectorField) {
        let w = ensemble::random_scalar(grid, seed);
        let mut rho = ScalarField::constant(grid, 1.0);
        rho.add_scaled(&w, 0.3 / w.linf());
        let u = ensemble::random_div_free(grid, seed ^ 0x5EED, 10.0, 1.0);
        (rho, u)
    }

    #[test]
    fn constant_density_yields_exactly_zero_direction_field() {
        // The transform of a constant is exact (pure cancellation), so X and
        // every ∂ₓ quantity vanish bitwise — not merely to rounding.
        let grid = TorusGrid::new(64).unwrap();
        let rho = ScalarField::constant(grid, 1.75);
        let x = compute_x(&rho);
        assert_eq!(x.linf(), 0.0);
        let u = ensemble::random_div_free(grid, 5, 10.0, 1.0);
        let dxu = directional_derivative(&x, &u, true);
        assert_eq!(dxu.linf(), 0.0);
    }

    #[test]
    fn constant_density_eta_is_density_times_vorticity() {
        let grid = TorusGrid::new(64).unwrap();
        let rho = ScalarField::constant(grid, 2.0);
        let u = ensemble::random_div_free(grid, 6, 10.0, 1.0);
        let eta = compute_eta(&rho, &u);
        let mut expected = compute_vorticity(&u);
        expected.scale(2.0);
        assert!(eta.linf_distance(&expected) < 1e-12);
    }

    #[test]
    fn rest_state_derived_fields_vanish() {
        let grid = TorusGrid::new(32).unwrap();
        let rho = ScalarField::from_fn(grid, |x, _| 2.0 + 0.5 * x.sin());
        let u = VectorField::zeros(grid);
        assert_eq!(compute_eta(&rho, &u).linf(), 0.0);
        assert_eq!(compute_momentum(&rho, &u).linf(), 0.0);
    }

    #[test]
    fn eta_identity_holds_on_random_states() {
        let grid = TorusGrid::new(128).unwrap();
        for seed in 0..3 {
            let (rho, u) = random_state(grid, 700 + seed);
            let res = eta_identity_residual(&rho, &u);
            assert!(res < 1e-9, "seed {seed}: {res}");
        }
    }

    #[test]
    fn momentum_splits_into_curl_and_gradient_parts() {
        let grid = TorusGrid::new(128).unwrap();
        let (rho, u) = random_state(grid, 41);
        let (sol, grad, residual) = helmholtz_momentum(&rho, &u);
        assert!(residual < 1e-9, "{residual}");
        // the parts are orthogonal: one is divergence-free, one curl-free
        assert!(ops::divergence(&sol).linf() < 1e-9);
        assert!(ops::curl2d(&grad).linf() < 1e-9);
    }

    #[test]
    fn helmholtz_gradient_part_vanishes_for_constant_density() {
        let grid = TorusGrid::new(64).unwrap();
        let rho = ScalarField::constant(grid, 1.0);
        let u = ensemble::random_div_free(grid, 77, 10.0, 1.0);
        let (sol, grad, residual) = helmholtz_momentum(&rho, &u);
        assert_eq!(grad.linf(), 0.0);
        assert!(residual < 1e-10);
        assert!(sol.linf_distance(&u) < 1e-10); // u already mean-free here
    }

    #[test]
    fn gradient_reconstruction_matches_spectral_gradient() {
        let grid = TorusGrid::new(128).unwrap();
        let (rho, u) = random_state(grid, 42);
        let (_, discrepancy) = reconstruct_grad_u(&rho, &u);
        assert!(discrepancy < 1e-9, "{discrepancy}");
    }

    #[test]
    fn constant_density_reconstruction_is_exact() {
        let grid = TorusGrid::new(64).unwrap();
        let rho = ScalarField::constant(grid, 1.0);
        let u = ensemble::random_div_free(grid, 43, 10.0, 1.0);
        let (_, discrepancy) = reconstruct_grad_u(&rho, &u);
        assert!(discrepancy < 1e-12, "{discrepancy}");
    }

    #[test]
    fn directional_derivative_of_energy_matches_twice_velocity_form() {
        // ∂ₓu·u = ½∂ₓ|u|² pointwise for alias-free band-limited states.
        let grid = TorusGrid::new(128).unwrap();
        let (rho, u) = random_state(grid, 44);
        let state = FlowState {
            t: 0.0,
            rho,
            u,
            co: None,
        };
        let dxu = compute_dxu(&state);
        let lhs = field::dealias_field(&dxu.dot_nodal(&state.u));
        let mut rhs = compute_dx_usq(&state);
        rhs.scale(0.5);
        assert!(lhs.linf_distance(&rhs) < 1e-9, "{}", lhs.linf_distance(&rhs));
    }

    #[test]
    fn direction_field_parallel_to_shear_kills_the_derivative() {
        // ρ = cos x₂ has X = (sin x₂, 0), parallel to u = (sin x₂, 0); u has
        // no x₁ dependence, so ∂ₓu = sin x₂·∂₁u = 0.
        let grid = TorusGrid::new(64).unwrap();
        let rho = ScalarField::from_fn(grid, |_, y| y.cos());
        let u = VectorField::from_fns(grid, |_, y| y.sin(), |_, _| 0.0);
        let x = compute_x(&rho);
        let expected = VectorField::from_fns(grid, |_, y| y.sin(), |_, _| 0.0);
        assert!(x.linf_distance(&expected) < 1e-12);
        let dxu = directional_derivative(&x, &u, true);
        assert!(dxu.linf() < 1e-13, "{}", dxu.linf());
    }

    #[test]
    fn singular_sups_vanish_in_degenerate_cases() {
        let grid = TorusGrid::new(64).unwrap();
        let u = ensemble::random_div_free(grid, 9, 10.0, 1.0);
        let rho_const = ScalarField::constant(grid, 1.0);
        let (_, s2) = singular_sups(&rho_const, &u);
        assert_eq!(s2, 0.0);
        let rho = ScalarField::from_fn(grid, |x, _| 2.0 + 0.5 * x.sin());
        let (s1, s2) = singular_sups(&rho, &VectorField::zeros(grid));
        assert_eq!(s1, 0.0);
        assert_eq!(s2, 0.0);
    }
}
