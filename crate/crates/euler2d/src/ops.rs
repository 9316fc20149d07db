//! Spectral differential operators: derivatives, (perp) gradients, divergence,
//! planar curl, inverse Laplacian and the Leray projector.
//!
//! All derivatives are exact multiplications by `i·k` on the coefficients. The
//! self-conjugate Nyquist line `|k| = n/2` is zeroed by first-derivative
//! multipliers (an odd multiplier there would break conjugate symmetry of real
//! fields); band-limited fields under the 2/3 rule never populate that line.

use crate::fft::C64;
use crate::field::{ScalarField, Spectrum, VectorField};

/// `∂f/∂x_axis` on coefficients (`axis` is 0 or 1).
pub fn derivative_spec(s: &Spectrum, axis: usize) -> Spectrum {
    assert!(axis < 2, "axis must be 0 or 1");
    let grid = *s.grid();
    let n = grid.n();
    let mut out = s.clone();
    let coef = out.coef_mut();
    for a in 0..n {
        let k1 = grid.wavenumber(a);
        for b in 0..n {
            let k2 = grid.wavenumber(b);
            let k = if axis == 0 { k1 } else { k2 };
            let idx = a * n + b;
            // zero the Nyquist line for odd multipliers
            if 2 * k.unsigned_abs() as usize == n {
                coef[idx] = C64::new(0.0, 0.0);
            } else {
                let c = coef[idx];
                coef[idx] = C64::new(-(k as f64) * c.im, (k as f64) * c.re);
            }
        }
    }
    out
}

/// `∂f/∂x_axis` in physical space.
pub fn derivative(f: &ScalarField, axis: usize) -> ScalarField {
    derivative_spec(&f.to_spectrum(), axis).to_field()
}

/// `∇f = (∂₁f, ∂₂f)`.
pub fn gradient(f: &ScalarField) -> VectorField {
    let s = f.to_spectrum();
    VectorField::new(
        derivative_spec(&s, 0).to_field(),
        derivative_spec(&s, 1).to_field(),
    )
}

/// `∇⊥f = (−∂₂f, ∂₁f)`.
pub fn perp_gradient(f: &ScalarField) -> VectorField {
    let s = f.to_spectrum();
    let mut mx = derivative_spec(&s, 1).to_field();
    mx.scale(-1.0);
    VectorField::new(mx, derivative_spec(&s, 0).to_field())
}

/// `div v = ∂₁v¹ + ∂₂v²`.
pub fn divergence(v: &VectorField) -> ScalarField {
    let mut out = derivative(&v.x, 0);
    let dy = derivative(&v.y, 1);
    out.add_scaled(&dy, 1.0);
    out
}

/// Planar curl `∂₁v² − ∂₂v¹`.
pub fn curl2d(v: &VectorField) -> ScalarField {
    let mut out = derivative(&v.y, 0);
    let dx = derivative(&v.x, 1);
    out.add_scaled(&dx, -1.0);
    out
}

/// `(−Δ)⁻¹` on coefficients: divide by `|k|²`, send the zero mode to zero
/// (mean-zero gauge).
pub fn inv_neg_laplacian_spec(s: &Spectrum) -> Spectrum {
    let grid = *s.grid();
    let mut out = s.clone();
    out.apply_mask(|a, b| {
        let ksq = grid.k_sq(a, b);
        if ksq == 0.0 {
            0.0
        } else {
            1.0 / ksq
        }
    });
    out
}

/// `(−Δ)⁻¹f` in physical space (mean-zero result).
pub fn inv_neg_laplacian(f: &ScalarField) -> ScalarField {
    inv_neg_laplacian_spec(&f.to_spectrum()).to_field()
}

/// Leray projection onto divergence-free fields:
/// `v̂ ↦ v̂ − k (k·v̂)/|k|²` for `k ≠ 0`; the mean is untouched.
pub fn leray_project_spec(sx: &mut Spectrum, sy: &mut Spectrum) {
    let grid = *sx.grid();
    let n = grid.n();
    let cx = sx.coef_mut();
    let cy = sy.coef_mut();
    for a in 0..n {
        let k1 = grid.wavenumber(a) as f64;
        for b in 0..n {
            let k2 = grid.wavenumber(b) as f64;
            let ksq = k1 * k1 + k2 * k2;
            if ksq == 0.0 {
                continue;
            }
            let idx = a * n + b;
            let dot = cx[idx] * k1 + cy[idx] * k2;
            cx[idx] -= dot * (k1 / ksq);
            cy[idx] -= dot * (k2 / ksq);
        }
    }
}

/// Leray projection in physical space.
pub fn leray_project(v: &VectorField) -> VectorField {
    let mut sx = v.x.to_spectrum();
    let mut sy = v.y.to_spectrum();
    leray_project_spec(&mut sx, &mut sy);
    VectorField::new(sx.to_field(), sy.to_field())
}
