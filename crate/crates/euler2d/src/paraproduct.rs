//! Bony decomposition of a pointwise product into two paraproducts and a
//! resonant remainder, with continuity-constant estimation over random
//! ensembles.
//!
//! With the dyadic blocks `Δ_j` (`j = −1..=j_max`) and low cutoffs `S_j`, the
//! paraproduct of `v` by `u` is `Σ_{j≥1} S_{j−1}u · Δ_j v` (the sum starts at
//! `j = 1` since `S_j := 0` for `j < 0`), and the remainder collects the
//! near-diagonal pairs `Σ_{|k−j|≤1} Δ_j u · Δ_k v`, including the low-block
//! interactions. The three parts add up to the dealiased product exactly (up
//! to rounding), the remainder is bitwise symmetric in its arguments, and
//! `Δ_j` of a paraproduct only sees blocks of either factor within distance 4
//! of `j`.

use serde::{Deserialize, Serialize};

use crate::ensemble;
use crate::error::{Error, Result};
use crate::field::{self, ScalarField};
use crate::lp::verify::{EnsembleSpec, RatioReport};
use crate::lp::{besov_norm, BesovSpec, DyadicPartition};
use crate::par;

/// The three parts of the product decomposition. `low_high` carries
/// low-frequency `u` against high blocks of `v`, `high_low` the reverse, and
/// `remainder` the near-diagonal interactions.
#[derive(Clone, Debug)]
pub struct BonyTriple {
    pub low_high: ScalarField,
    pub high_low: ScalarField,
    pub remainder: ScalarField,
}

impl BonyTriple {
    /// Reassembled product; equals the dealiased pointwise product up to
    /// rounding.
    pub fn sum(&self) -> ScalarField {
        let mut out = self.low_high.clone();
        out.add_scaled(&self.high_low, 1.0);
        out.add_scaled(&self.remainder, 1.0);
        out
    }
}

/// `Σ_{j≥1} S_{j−1}u · Δ_j v` from precomputed block fields of both factors,
/// dealiased once at the end.
fn paraproduct_from_blocks(
    part: &DyadicPartition,
    blocks_u: &[ScalarField],
    blocks_v: &[ScalarField],
) -> ScalarField {
    let grid = *part.grid();
    let mut acc = ScalarField::zeros(grid);
    // S₀u = Δ₋₁u; after term j the running cutoff gains Δ_{j−1}u.
    let mut low = blocks_u[0].clone();
    for j in 1..=part.j_max() {
        {
            let acc_vals = acc.values_mut();
            let high = blocks_v[(j + 1) as usize].values();
            for (a, (l, h)) in acc_vals.iter_mut().zip(low.values().iter().zip(high)) {
                *a += l * h;
            }
        }
        low.add_scaled(&blocks_u[j as usize], 1.0);
    }
    field::dealias_field(&acc)
}

/// Near-diagonal part from precomputed blocks. Each `j` contributes
/// `Δ_j u·Δ_j v + (Δ_j u·Δ_{j+1}v + Δ_{j+1}u·Δ_j v)` with fixed grouping, so
/// swapping the arguments reproduces the result bit for bit.
fn remainder_from_blocks(
    part: &DyadicPartition,
    blocks_u: &[ScalarField],
    blocks_v: &[ScalarField],
) -> ScalarField {
    let grid = *part.grid();
    let count = part.block_count();
    let mut acc = ScalarField::zeros(grid);
    for idx in 0..count {
        let bu = blocks_u[idx].values();
        let bv = blocks_v[idx].values();
        let acc_vals = acc.values_mut();
        if idx + 1 < count {
            let bu_up = blocks_u[idx + 1].values();
            let bv_up = blocks_v[idx + 1].values();
            for i in 0..acc_vals.len() {
                acc_vals[i] += bu[i] * bv[i] + (bu[i] * bv_up[i] + bu_up[i] * bv[i]);
            }
        } else {
            for i in 0..acc_vals.len() {
                acc_vals[i] += bu[i] * bv[i];
            }
        }
    }
    field::dealias_field(&acc)
}

/// Low-high paraproduct of `v` by `u`.
pub fn paraproduct(part: &DyadicPartition, u: &ScalarField, v: &ScalarField) -> Result<ScalarField> {
    part.grid().ensure_same(u.grid())?;
    part.grid().ensure_same(v.grid())?;
    let blocks_u = part.block_fields(u)?;
    let blocks_v = part.block_fields(v)?;
    Ok(paraproduct_from_blocks(part, &blocks_u, &blocks_v))
}

/// Symmetric near-diagonal remainder.
pub fn remainder(part: &DyadicPartition, u: &ScalarField, v: &ScalarField) -> Result<ScalarField> {
    part.grid().ensure_same(u.grid())?;
    part.grid().ensure_same(v.grid())?;
    let blocks_u = part.block_fields(u)?;
    let blocks_v = part.block_fields(v)?;
    Ok(remainder_from_blocks(part, &blocks_u, &blocks_v))
}

/// Full decomposition, sharing one block synthesis per factor.
pub fn bony_decompose(
    part: &DyadicPartition,
    u: &ScalarField,
    v: &ScalarField,
) -> Result<BonyTriple> {
    part.grid().ensure_same(u.grid())?;
    part.grid().ensure_same(v.grid())?;
    let blocks_u = part.block_fields(u)?;
    let blocks_v = part.block_fields(v)?;
    Ok(BonyTriple {
        low_high: paraproduct_from_blocks(part, &blocks_u, &blocks_v),
        high_low: paraproduct_from_blocks(part, &blocks_v, &blocks_u),
        remainder: remainder_from_blocks(part, &blocks_u, &blocks_v),
    })
}

/// `‖(low_high + high_low + remainder) − dealias(u·v)‖_{L∞}`.
pub fn reconstruction_residual(
    part: &DyadicPartition,
    u: &ScalarField,
    v: &ScalarField,
) -> Result<f64> {
    let triple = bony_decompose(part, u, v)?;
    let product = field::mul_dealiased(u, v);
    Ok(triple.sum().linf_distance(&product))
}

/// Which continuity estimate to measure. Index admissibility is validated
/// before sampling; the output space of each estimate is derived from the
/// input spaces by the corresponding index arithmetic.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub enum ContinuityEstimate {
    /// `‖𝒯_u v‖ ≤ C ‖u‖_{L∞} ‖v‖` in the target space (any admissible
    /// indices, log weight included).
    ParaLinf { target: BesovSpec },
    /// Paraproduct with `u` in a negative-regularity sup-type space
    /// (`u_space.p = ∞`, `s = −t ≤ 0`): output loses `t` in regularity and
    /// adds the log weights; output third index `q` from
    /// `1/q = min{1, 1/r₁ + 1/r₂}`.
    ParaNegative {
        u_space: BesovSpec,
        v_space: BesovSpec,
    },
    /// Remainder with `s₁ + s₂ > 0`: output regularity `s₁ + s₂`, Lebesgue and
    /// summation indices by reciprocal addition (each sum must stay ≤ 1).
    RemainderPositive {
        u_space: BesovSpec,
        v_space: BesovSpec,
    },
    /// Borderline remainder `s₁ + s₂ = 0` with `1/r₁ + 1/r₂ = 1` and
    /// `α + β ≥ 0`: output is the sup-summation space of regularity 0 with
    /// log weight `α + β`.
    RemainderZero {
        u_space: BesovSpec,
        v_space: BesovSpec,
    },
    /// Tame product bound for `s > 0`:
    /// `‖uv‖ ≤ C(‖u‖_{L∞}‖v‖ + ‖v‖_{L∞}‖u‖)` in one space.
    Tame { space: BesovSpec },
}

fn inv(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        1.0 / x
    }
}

fn from_inv(x: f64) -> f64 {
    if x <= 0.0 {
        f64::INFINITY
    } else {
        1.0 / x
    }
}

impl ContinuityEstimate {
    /// Derived output space, or an explanation of why the indices are
    /// inadmissible.
    pub fn output_space(&self) -> Result<BesovSpec> {
        match self {
            ContinuityEstimate::ParaLinf { target } => {
                target.validate()?;
                Ok(*target)
            }
            ContinuityEstimate::ParaNegative { u_space, v_space } => {
                u_space.validate()?;
                v_space.validate()?;
                if !u_space.p.is_infinite() {
                    return Err(Error::Inadmissible(format!(
                        "low factor must sit in a sup-type space (p = ∞), got p = {}",
                        u_space.p
                    )));
                }
                let t = -u_space.s;
                let edge_ok = t == 0.0 && u_space.alpha <= 0.0 && u_space.r.is_infinite();
                if !(t > 0.0 || edge_ok) {
                    return Err(Error::Inadmissible(format!(
                        "low factor needs regularity −t < 0 (or t = 0 with α ≤ 0, r = ∞); got {u_space}"
                    )));
                }
                let q = from_inv(f64::min(1.0, inv(v_space.r) + inv(u_space.r)));
                Ok(BesovSpec::with_log(
                    v_space.s + u_space.s,
                    v_space.p,
                    q,
                    v_space.alpha + u_space.alpha,
                ))
            }
            ContinuityEstimate::RemainderPositive { u_space, v_space } => {
                u_space.validate()?;
                v_space.validate()?;
                let s = u_space.s + v_space.s;
                if !(s > 0.0) {
                    return Err(Error::Inadmissible(format!(
                        "remainder needs s₁ + s₂ > 0, got {s}"
                    )));
                }
                let ip = inv(u_space.p) + inv(v_space.p);
                let ir = inv(u_space.r) + inv(v_space.r);
                if ip > 1.0 + 1e-12 || ir > 1.0 + 1e-12 {
                    return Err(Error::Inadmissible(format!(
                        "reciprocal index sums must stay ≤ 1: 1/p₁+1/p₂ = {ip}, 1/r₁+1/r₂ = {ir}"
                    )));
                }
                Ok(BesovSpec::with_log(
                    s,
                    from_inv(ip),
                    from_inv(ir),
                    u_space.alpha + v_space.alpha,
                ))
            }
            ContinuityEstimate::RemainderZero { u_space, v_space } => {
                u_space.validate()?;
                v_space.validate()?;
                let s = u_space.s + v_space.s;
                if s.abs() > 1e-12 {
                    return Err(Error::Inadmissible(format!(
                        "borderline remainder needs s₁ + s₂ = 0, got {s}"
                    )));
                }
                let alpha = u_space.alpha + v_space.alpha;
                if alpha < 0.0 {
                    return Err(Error::Inadmissible(format!(
                        "borderline remainder needs α + β ≥ 0, got {alpha}"
                    )));
                }
                let ip = inv(u_space.p) + inv(v_space.p);
                let ir = inv(u_space.r) + inv(v_space.r);
                if ip > 1.0 + 1e-12 {
                    return Err(Error::Inadmissible(format!(
                        "1/p₁ + 1/p₂ must stay ≤ 1, got {ip}"
                    )));
                }
                if (ir - 1.0).abs() > 1e-12 {
                    return Err(Error::Inadmissible(format!(
                        "borderline remainder needs 1/r₁ + 1/r₂ = 1, got {ir}"
                    )));
                }
                Ok(BesovSpec::with_log(0.0, from_inv(ip), f64::INFINITY, alpha))
            }
            ContinuityEstimate::Tame { space } => {
                space.validate()?;
                if !(space.s > 0.0) {
                    return Err(Error::Inadmissible(format!(
                        "tame product bound needs s > 0, got {}",
                        space.s
                    )));
                }
                Ok(*space)
            }
        }
    }

    fn label(&self) -> String {
        match self {
            ContinuityEstimate::ParaLinf { target } => format!("para_linf({target})"),
            ContinuityEstimate::ParaNegative { u_space, v_space } => {
                format!("para_negative({u_space}, {v_space})")
            }
            ContinuityEstimate::RemainderPositive { u_space, v_space } => {
                format!("remainder_positive({u_space}, {v_space})")
            }
            ContinuityEstimate::RemainderZero { u_space, v_space } => {
                format!("remainder_zero({u_space}, {v_space})")
            }
            ContinuityEstimate::Tame { space } => format!("tame({space})"),
        }
    }

    /// `‖operator output‖ / (product of right-hand-side norms)` for one pair.
    pub fn sample_ratio(
        &self,
        part: &DyadicPartition,
        u: &ScalarField,
        v: &ScalarField,
    ) -> Result<f64> {
        let out_space = self.output_space()?;
        match self {
            ContinuityEstimate::ParaLinf { target } => {
                let t = paraproduct(part, u, v)?;
                let lhs = besov_norm(part, &t, &out_space)?;
                Ok(lhs / (u.linf() * besov_norm(part, v, target)?))
            }
            ContinuityEstimate::ParaNegative { u_space, v_space } => {
                let t = paraproduct(part, u, v)?;
                let lhs = besov_norm(part, &t, &out_space)?;
                Ok(lhs / (besov_norm(part, u, u_space)? * besov_norm(part, v, v_space)?))
            }
            ContinuityEstimate::RemainderPositive { u_space, v_space }
            | ContinuityEstimate::RemainderZero { u_space, v_space } => {
                let r = remainder(part, u, v)?;
                let lhs = besov_norm(part, &r, &out_space)?;
                Ok(lhs / (besov_norm(part, u, u_space)? * besov_norm(part, v, v_space)?))
            }
            ContinuityEstimate::Tame { space } => {
                let uv = field::mul_dealiased(u, v);
                let lhs = besov_norm(part, &uv, &out_space)?;
                let rhs = u.linf() * besov_norm(part, v, space)?
                    + v.linf() * besov_norm(part, u, space)?;
                Ok(lhs / rhs)
            }
        }
    }
}

/// Default empirical constant for the continuity ratios (generous headroom
/// over the worst observed values at n = 128).
pub const CONTINUITY_THRESHOLD: f64 = 16.0;

/// Measure one continuity estimate on a seeded ensemble of independent pairs.
pub fn estimate_continuity_constant(
    part: &DyadicPartition,
    which: &ContinuityEstimate,
    ens: &EnsembleSpec,
    threshold: f64,
) -> Result<RatioReport> {
    which.output_space()?;
    let grid = *part.grid();
    let ratios: Vec<f64> = par::map_indexed(ens.samples, |i| {
        let u = ensemble::random_scalar_shaped(
            grid,
            ensemble::sample_seed(ens.seed, 2 * i),
            ens.band,
            ens.decay,
        );
        let v = ensemble::random_scalar_shaped(
            grid,
            ensemble::sample_seed(ens.seed, 2 * i + 1),
            ens.band,
            ens.decay,
        );
        which.sample_ratio(part, &u, &v).expect("validated indices")
    });
    Ok(RatioReport::from_ratios(which.label(), ratios, threshold))
}
