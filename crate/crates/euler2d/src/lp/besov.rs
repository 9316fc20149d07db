//! Besov-type norms with logarithmic weights over the dyadic decomposition.
//!
//! For indices `(s, p, r)` and log exponent `α` the norm is the truncated
//! lattice sum
//!
//! ```text
//! ‖f‖ = ‖ ( 2^{js} (2+j)^α ‖Δ_j f‖_{Lᵖ} )_{j=−1..j_max} ‖_{ℓʳ}
//! ```
//!
//! with grid-quadrature Lᵖ norms. Norms of fields with meaningful content in
//! the top block are resolution-limited; [`top_block_share`] exposes the
//! tail share so callers can flag under-resolution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::par;

use super::DyadicPartition;

/// Index set of a (log-weighted) Besov norm: `B^{s + α·log}_{p,r}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovSpec {
    /// Regularity index.
    pub s: f64,
    /// Lebesgue exponent of the blocks, `1 ≤ p ≤ ∞`.
    pub p: f64,
    /// Summation exponent over blocks, `1 ≤ r ≤ ∞`.
    pub r: f64,
    /// Logarithmic weight exponent (0 for classical spaces).
    pub alpha: f64,
}

impl BesovSpec {
    pub const fn new(s: f64, p: f64, r: f64) -> Self {
        BesovSpec {
            s,
            p,
            r,
            alpha: 0.0,
        }
    }

    pub const fn with_log(s: f64, p: f64, r: f64, alpha: f64) -> Self {
        BesovSpec { s, p, r, alpha }
    }

    /// `B⁰_{∞,1}`, the block-summable sup-norm space used by the growth
    /// monitors.
    pub const B0_INF_1: BesovSpec = BesovSpec::new(0.0, f64::INFINITY, 1.0);

    /// `B⁰_{∞,∞}`.
    pub const B0_INF_INF: BesovSpec = BesovSpec::new(0.0, f64::INFINITY, f64::INFINITY);

    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0) || !(self.r >= 1.0) || !self.s.is_finite() || !self.alpha.is_finite() {
            return Err(Error::Inadmissible(format!(
                "Besov indices need 1 ≤ p, r ≤ ∞ and finite s, α; got {self}"
            )));
        }
        Ok(())
    }
}

impl std::fmt::Display for BesovSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fn exp(v: f64) -> String {
            if v.is_infinite() {
                "inf".to_string()
            } else {
                format!("{v}")
            }
        }
        if self.alpha == 0.0 {
            write!(f, "B^{}_{{{},{}}}", self.s, exp(self.p), exp(self.r))
        } else {
            write!(
                f,
                "B^{{{}+{}log}}_{{{},{}}}",
                self.s,
                self.alpha,
                exp(self.p),
                exp(self.r)
            )
        }
    }
}

/// Per-block Lᵖ norms `‖Δ_j f‖_{Lᵖ}`, `j = −1..=j_max` (index 0 ↔ j = −1).
pub fn besov_block_norms(part: &DyadicPartition, f: &ScalarField, p: f64) -> Result<Vec<f64>> {
    part.grid().ensure_same(f.grid())?;
    assert!(p >= 1.0, "block Lᵖ norms need p ≥ 1");
    let spectrum = f.to_spectrum();
    // Each block synthesis is independent; norms are taken per block, so
    // parallel dispatch stays bit-deterministic.
    let norms = par::map_indexed(part.block_count(), |t| {
        let j = t as i32 - 1;
        let block = part
            .dyadic_block_spec(&spectrum, j)
            .expect("index in range")
            .to_field();
        block.lp_norm(p)
    });
    Ok(norms)
}

fn aggregate(norms: &[f64], spec: &BesovSpec) -> f64 {
    let weighted = norms.iter().enumerate().map(|(t, v)| {
        let j = t as i32 - 1;
        let w = 2f64.powf(spec.s * j as f64) * ((2 + j) as f64).powf(spec.alpha);
        w * v
    });
    if spec.r.is_infinite() {
        weighted.fold(0.0, f64::max)
    } else {
        let sum: f64 = weighted.map(|v| v.powf(spec.r)).sum();
        sum.powf(1.0 / spec.r)
    }
}

/// Truncated Besov norm of a scalar field.
pub fn besov_norm(part: &DyadicPartition, f: &ScalarField, spec: &BesovSpec) -> Result<f64> {
    spec.validate()?;
    let norms = besov_block_norms(part, f, spec.p)?;
    Ok(aggregate(&norms, spec))
}

/// Besov norm of a vector field: the max over components.
pub fn besov_norm_vec(part: &DyadicPartition, v: &VectorField, spec: &BesovSpec) -> Result<f64> {
    Ok(besov_norm(part, &v.x, spec)?.max(besov_norm(part, &v.y, spec)?))
}

/// Share of the `B⁰_{p,1}`-type block sum carried by the top block
/// (`j = j_max`); 0 when the field vanishes.
pub fn top_block_share(part: &DyadicPartition, f: &ScalarField, p: f64) -> Result<f64> {
    let norms = besov_block_norms(part, f, p)?;
    let total: f64 = norms.iter().sum();
    if total <= 0.0 {
        return Ok(0.0);
    }
    Ok(norms.last().copied().unwrap_or(0.0) / total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TorusGrid;

    #[test]
    fn single_mode_norm_closed_form() {
        // f = sin(2x₁) sits in block j = 1 alone with sup-norm 1, so the
        // (s, ∞, 1, α) norm is exactly 2^s·3^α.
        let grid = TorusGrid::new(64).unwrap();
        let part = DyadicPartition::new(grid);
        let f = ScalarField::from_fn(grid, |x, _| (2.0 * x).sin());
        for (s, alpha) in [(0.0, 0.0), (1.5, 0.0), (-1.0, 2.0), (0.5, 1.0)] {
            let spec = BesovSpec::with_log(s, f64::INFINITY, 1.0, alpha);
            let got = besov_norm(&part, &f, &spec).unwrap();
            let want = 2f64.powf(s) * 3f64.powf(alpha);
            assert!(
                (got - want).abs() <= 1e-10 * want,
                "{spec}: got {got}, want {want}"
            );
        }
    }

    #[test]
    fn constant_norm_closed_form() {
        // Constants live in block −1 with weight 2^{−s}·(2−1)^α = 2^{−s}.
        let grid = TorusGrid::new(32).unwrap();
        let part = DyadicPartition::new(grid);
        let f = ScalarField::constant(grid, -1.75);
        for s in [0.0, 1.0, -0.5] {
            let spec = BesovSpec::new(s, f64::INFINITY, 2.0);
            let got = besov_norm(&part, &f, &spec).unwrap();
            let want = 2f64.powf(-s) * 1.75;
            assert!((got - want).abs() < 1e-10, "s = {s}: got {got}, want {want}");
        }
    }

    #[test]
    fn rejects_bad_indices() {
        let grid = TorusGrid::new(32).unwrap();
        let part = DyadicPartition::new(grid);
        let f = ScalarField::constant(grid, 1.0);
        let bad = BesovSpec::new(0.0, 0.5, 1.0);
        assert!(besov_norm(&part, &f, &bad).is_err());
    }

    #[test]
    fn b0_inf_1_dominates_sup() {
        // ‖f‖_∞ ≤ Σ_j ‖Δ_j f‖_∞ for resolvable fields.
        let grid = TorusGrid::new(64).unwrap();
        let part = DyadicPartition::new(grid);
        let f = crate::ensemble::random_scalar(grid, 11);
        let b = besov_norm(&part, &f, &BesovSpec::B0_INF_1).unwrap();
        assert!(f.linf() <= b * (1.0 + 1e-12));
    }
}
