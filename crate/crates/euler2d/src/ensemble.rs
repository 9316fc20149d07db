//! Seeded random band-limited fields for ensemble verification.
//!
//! Coefficients are drawn *per mode* from a stream keyed by `(seed, k₁, k₂)`,
//! so the same seed produces the same continuum field on every grid that
//! resolves the requested band. Cross-resolution comparisons then probe the
//! estimates themselves rather than interpolation error. Fields are normalized
//! to unit L² via Parseval, which is also resolution-independent.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::fft::C64;
use crate::field::{ScalarField, Spectrum, VectorField};
use crate::grid::TorusGrid;
use crate::ops;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn mode_seed(seed: u64, k1: i64, k2: i64) -> u64 {
    splitmix(seed ^ splitmix((k1 as u64) ^ splitmix(k2 as u64 ^ 0x5851_F42D_4C95_7F2D)))
}

/// Derive an independent per-sample seed from an ensemble seed, so that
/// sample `i` of an ensemble is reproducible in isolation.
pub fn sample_seed(seed: u64, i: usize) -> u64 {
    splitmix(seed ^ splitmix(i as u64 ^ 0xA076_1D64_78BD_642F))
}

/// Fill conjugate-symmetric Gaussian coefficients on modes selected by
/// `keep(|k|)`, weighted by `weight(|k|)`, then normalize to unit L².
fn random_spectrum(
    grid: TorusGrid,
    seed: u64,
    keep: impl Fn(f64) -> bool,
    weight: impl Fn(f64) -> f64,
) -> Spectrum {
    let n = grid.n();
    let half = (n / 2) as i64;
    let mut spec = Spectrum::zeros(grid);
    let mut total = 0.0f64;
    {
        let coef = spec.coef_mut();
        for k1 in -(half - 1)..=(half - 1) {
            for k2 in -(half - 1)..=(half - 1) {
                // fill each conjugate pair once, from the half-lattice
                // k₁ > 0 or (k₁ = 0 and k₂ > 0)
                if !(k1 > 0 || (k1 == 0 && k2 > 0)) {
                    continue;
                }
                let r = ((k1 * k1 + k2 * k2) as f64).sqrt();
                if !keep(r) {
                    continue;
                }
                let mut rng = ChaCha8Rng::seed_from_u64(mode_seed(seed, k1, k2));
                let g1: f64 = StandardNormal.sample(&mut rng);
                let g2: f64 = StandardNormal.sample(&mut rng);
                let c = C64::new(g1, g2) * weight(r);
                let a = ((k1 % n as i64 + n as i64) % n as i64) as usize;
                let b = ((k2 % n as i64 + n as i64) % n as i64) as usize;
                let am = ((n - a) % n) as usize;
                let bm = ((n - b) % n) as usize;
                coef[a * n + b] = c;
                coef[am * n + bm] = c.conj();
                total += 2.0 * c.norm_sqr();
            }
        }
    }
    if total > 0.0 {
        // Parseval: ‖f‖_{L²}² = (2π)² Σ|f̂|²; normalize to ‖f‖_{L²} = 1.
        let s = 1.0 / (2.0 * std::f64::consts::PI * total.sqrt());
        let coef = spec.coef_mut();
        for c in coef.iter_mut() {
            *c *= s;
        }
    }
    spec
}

/// Mean-zero random field with modes `0 < |k| ≤ band` and power-law taper
/// `(1 + |k|²)^{−decay/2}`; unit L² norm.
pub fn random_scalar_shaped(grid: TorusGrid, seed: u64, band: f64, decay: f64) -> ScalarField {
    assert!(band < grid.n() as f64 / 2.0, "band must be resolvable");
    random_spectrum(
        grid,
        seed,
        |r| r > 0.0 && r <= band,
        |r| (1.0 + r * r).powf(-decay / 2.0),
    )
    .to_field()
}

/// Default ensemble field: band 10, mild decay.
pub fn random_scalar(grid: TorusGrid, seed: u64) -> ScalarField {
    random_scalar_shaped(grid, seed, DEFAULT_BAND, 1.0)
}

/// Band shared by the standard verification ensembles. Low enough that all
/// quadratic products stay alias-free even at n = 64.
pub const DEFAULT_BAND: f64 = 10.0;

/// Random field supported in the ball `|k| ≤ λ` (flat weights).
pub fn random_ball(grid: TorusGrid, seed: u64, lambda: f64) -> ScalarField {
    assert!(lambda < grid.n() as f64 / 2.0);
    random_spectrum(grid, seed, |r| r > 0.0 && r <= lambda, |_| 1.0).to_field()
}

/// Random field supported in the shell `λ/2 < |k| ≤ λ` (flat weights).
pub fn random_shell(grid: TorusGrid, seed: u64, lambda: f64) -> ScalarField {
    assert!(lambda < grid.n() as f64 / 2.0);
    random_spectrum(grid, seed, |r| r > lambda / 2.0 && r <= lambda, |_| 1.0).to_field()
}

/// Divergence-free random field `∇⊥ψ` with ψ drawn as [`random_scalar_shaped`]
/// (one extra decay power so the velocity has the requested roll-off).
pub fn random_div_free(grid: TorusGrid, seed: u64, band: f64, decay: f64) -> VectorField {
    let psi = random_scalar_shaped(grid, seed, band, decay + 1.0);
    ops::perp_gradient(&psi)
}
