//! Smooth dyadic partition of unity on the wavenumber lattice.
//!
//! The radial profile is the concrete smooth cutoff
//!
//! ```text
//! χ(ξ) = H((1.9 − |ξ|)/0.8),   H(t) = G(t)/(G(t) + G(1−t)),   G(t) = e^{−1/t}·1_{t>0}
//! ```
//!
//! so χ ≡ 1 for |ξ| ≤ 1.1, χ ≡ 0 for |ξ| ≥ 1.9, and χ is C^∞ and radially
//! non-increasing. Annulus profiles are φ(ξ) = χ(ξ) − χ(2ξ), and the blocks are
//!
//! * `Δ₋₁` with multiplier χ(2|k|) (support |k| ≤ 0.95, ≡ 1 for |k| ≤ 0.55),
//! * `Δ_j` with multiplier φ(2^{−j}|k|) for j ≥ 0
//!   (support 0.55·2^j ≤ |k| ≤ 1.9·2^j ⊂ [2^{j−1}, 2^{j+1}]).
//!
//! With the low block at the *doubled* argument the telescoping is exact:
//! χ(2ξ) + Σ_{j=0}^{J} φ(2^{−j}ξ) = χ(2^{−J}ξ), which equals 1 on every
//! lattice point with |k| ≤ 1.1·2^{J}. Truncating at `j_max = log₂(n) − 1`
//! covers |k| ≤ 0.55·n, in particular the closed ball |k| ≤ n/2 and the whole
//! 2/3-rule cube. Low cutoffs are the block sums `S_j = Σ_{k≤j−1} Δ_k`
//! (zero for j ≤ −1), the convention under which the Bony splitting
//! implemented in [`crate::paraproduct`] reconstructs products exactly.

use crate::error::{Error, Result};
use crate::field::{ScalarField, Spectrum};
use crate::grid::TorusGrid;
use crate::par;

/// Sampled dyadic multiplier tables for one grid.
#[derive(Clone, Debug)]
pub struct DyadicPartition {
    grid: TorusGrid,
    j_max: i32,
    /// `tables[j + 1]` is the multiplier of block `j`, `j = −1..=j_max`.
    tables: Vec<Vec<f64>>,
}

fn bump(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

impl DyadicPartition {
    /// The radial cutoff profile χ.
    pub fn chi(xi: f64) -> f64 {
        let t = (1.9 - xi.abs()) / 0.8;
        let g = bump(t);
        let h = bump(1.0 - t);
        // g + h > 0 for every real t (one of the two bumps is active)
        g / (g + h)
    }

    /// The annulus profile φ(ξ) = χ(ξ) − χ(2ξ).
    pub fn phi(xi: f64) -> f64 {
        Self::chi(xi) - Self::chi(2.0 * xi)
    }

    /// Multiplier of block `j` at radius `r` on the lattice.
    pub fn block_profile(j: i32, r: f64) -> f64 {
        if j == -1 {
            Self::chi(2.0 * r)
        } else {
            Self::phi(r / 2f64.powi(j))
        }
    }

    /// Build the sampled tables for `grid`.
    pub fn new(grid: TorusGrid) -> DyadicPartition {
        let j_max = grid.j_max();
        let n = grid.n();
        let tables = par::map_indexed((j_max + 2) as usize, |t| {
            let j = t as i32 - 1;
            let mut table = vec![0.0f64; grid.len()];
            for a in 0..n {
                for b in 0..n {
                    table[a * n + b] = Self::block_profile(j, grid.k_norm(a, b));
                }
            }
            table
        });
        DyadicPartition {
            grid,
            j_max,
            tables,
        }
    }

    #[inline]
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    /// Largest block index: `2^{j_max} ≤ n/2 < 2^{j_max+1}`.
    #[inline]
    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    /// Number of blocks (`j = −1..=j_max`).
    #[inline]
    pub fn block_count(&self) -> usize {
        (self.j_max + 2) as usize
    }

    /// Sampled multiplier table of block `j`.
    pub fn block_table(&self, j: i32) -> Result<&[f64]> {
        if j < -1 || j > self.j_max {
            return Err(Error::BlockOutOfRange {
                j,
                j_max: self.j_max,
            });
        }
        Ok(&self.tables[(j + 1) as usize])
    }

    /// `Δ_j f` on coefficients.
    pub fn dyadic_block_spec(&self, f: &Spectrum, j: i32) -> Result<Spectrum> {
        self.grid.ensure_same(f.grid())?;
        let table = self.block_table(j)?;
        let mut out = f.clone();
        for (c, w) in out.coef_mut().iter_mut().zip(table.iter()) {
            *c *= *w;
        }
        Ok(out)
    }

    /// `Δ_j f` in physical space.
    pub fn dyadic_block(&self, f: &ScalarField, j: i32) -> Result<ScalarField> {
        Ok(self.dyadic_block_spec(&f.to_spectrum(), j)?.to_field())
    }

    /// All block fields `Δ_j f` for `j = −1..=j_max` (index `j + 1`), sharing
    /// one forward transform.
    pub fn block_fields(&self, f: &ScalarField) -> Result<Vec<ScalarField>> {
        self.grid.ensure_same(f.grid())?;
        let spec = f.to_spectrum();
        Ok(crate::par::map_indexed(self.block_count(), |idx| {
            self.dyadic_block_spec(&spec, idx as i32 - 1)
                .expect("index in range")
                .to_field()
        }))
    }

    /// Low cutoff `S_j f = Σ_{k ≤ j−1} Δ_k f` on coefficients (equivalently the
    /// multiplier χ(2^{1−j}|k|) on this lattice). `S_j = 0` for `j ≤ −1`;
    /// `j = j_max + 1` reproduces every resolvable frequency.
    pub fn low_cutoff_spec(&self, f: &Spectrum, j: i32) -> Result<Spectrum> {
        self.grid.ensure_same(f.grid())?;
        if j > self.j_max + 1 {
            return Err(Error::BlockOutOfRange {
                j,
                j_max: self.j_max,
            });
        }
        if j <= -1 {
            return Ok(Spectrum::zeros(self.grid));
        }
        let grid = self.grid;
        let scale = 2f64.powi(1 - j);
        let mut out = f.clone();
        out.apply_mask(|a, b| Self::chi(scale * grid.k_norm(a, b)));
        Ok(out)
    }

    /// Low cutoff in physical space.
    pub fn low_cutoff(&self, f: &ScalarField, j: i32) -> Result<ScalarField> {
        Ok(self.low_cutoff_spec(&f.to_spectrum(), j)?.to_field())
    }

    /// Worst deviation of `Σ_j multiplier_j(k)` from 1 over the lattice points
    /// with `|k| ≤ n/2`.
    pub fn partition_defect(&self) -> f64 {
        let n = self.grid.n();
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                if self.grid.k_norm(a, b) > n as f64 / 2.0 {
                    continue;
                }
                let sum: f64 = self.tables.iter().map(|t| t[a * n + b]).sum();
                worst = worst.max((sum - 1.0).abs());
            }
        }
        worst
    }

    /// Worst product of multipliers of blocks at distance ≥ 2 over the lattice
    /// (witnesses near-annulus support disjointness).
    pub fn disjointness_defect(&self) -> f64 {
        let n = self.grid.n();
        let mut worst = 0.0f64;
        for j in -1..=self.j_max {
            for k in (j + 2)..=self.j_max {
                let tj = &self.tables[(j + 1) as usize];
                let tk = &self.tables[(k + 1) as usize];
                for idx in 0..n * n {
                    worst = worst.max((tj[idx] * tk[idx]).abs());
                }
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ScalarField;

    #[test]
    fn profile_plateaus() {
        assert_eq!(DyadicPartition::chi(0.0), 1.0);
        assert_eq!(DyadicPartition::chi(1.1), 1.0);
        assert_eq!(DyadicPartition::chi(1.9), 0.0);
        assert_eq!(DyadicPartition::chi(3.0), 0.0);
        let mid = DyadicPartition::chi(1.5);
        assert!(mid > 0.0 && mid < 1.0);
        // radially non-increasing on a sweep
        let mut prev = 1.0;
        for i in 0..200 {
            let v = DyadicPartition::chi(i as f64 * 0.02);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
    }

    #[test]
    fn lattice_partition_of_unity() {
        for n in [16usize, 64] {
            let part = DyadicPartition::new(TorusGrid::new(n).unwrap());
            assert!(
                part.partition_defect() <= 1e-12,
                "partition defect at n = {n}: {}",
                part.partition_defect()
            );
        }
    }

    #[test]
    fn blocks_two_apart_are_disjoint() {
        let part = DyadicPartition::new(TorusGrid::new(64).unwrap());
        assert!(part.disjointness_defect() <= 1e-12);
    }

    #[test]
    fn mode_two_lands_in_block_one() {
        // |k| = 2: φ₁(2) = φ(1) = χ(1) − χ(2) = 1, all other blocks vanish.
        let grid = TorusGrid::new(32).unwrap();
        let part = DyadicPartition::new(grid);
        let f = ScalarField::from_fn(grid, |x, _| (2.0 * x).sin());
        for j in -1..=part.j_max() {
            let block = part.dyadic_block(&f, j).unwrap();
            if j == 1 {
                assert!(block.linf_distance(&f) < 1e-12, "Δ₁ f = f");
            } else {
                assert!(block.linf() < 1e-12, "Δ_{j} f = 0");
            }
        }
        assert!(part.dyadic_block(&f, -2).is_err());
        assert!(part.dyadic_block(&f, part.j_max() + 1).is_err());
    }

    #[test]
    fn constants_live_in_the_low_block() {
        let grid = TorusGrid::new(32).unwrap();
        let part = DyadicPartition::new(grid);
        let c = ScalarField::constant(grid, 3.25);
        let low = part.dyadic_block(&c, -1).unwrap();
        assert!(low.linf_distance(&c) < 1e-12);
        for j in 0..=part.j_max() {
            assert!(part.dyadic_block(&c, j).unwrap().linf() < 1e-13);
        }
    }

    #[test]
    fn low_cutoff_is_cumulative_block_sum() {
        let grid = TorusGrid::new(32).unwrap();
        let part = DyadicPartition::new(grid);
        let f = ScalarField::from_fn(grid, |x, y| {
            1.0 + (2.0 * x).sin() + 0.5 * (7.0 * y).cos() + 0.25 * (3.0 * x + 5.0 * y).sin()
        });
        for j in 0..=(part.j_max() + 1) {
            let s = part.low_cutoff(&f, j).unwrap();
            let mut sum = ScalarField::zeros(grid);
            for k in -1..=(j - 1).min(part.j_max()) {
                sum.add_scaled(&part.dyadic_block(&f, k).unwrap(), 1.0);
            }
            assert!(
                s.linf_distance(&sum) < 1e-12,
                "S_{j} differs from its block sum"
            );
        }
        // reconstruction: S_{j_max+1} = identity on resolvable fields
        let full = part.low_cutoff(&f, part.j_max() + 1).unwrap();
        assert!(full.linf_distance(&f) < 1e-12);
        // S_j = 0 for j ≤ −1
        assert!(part.low_cutoff(&f, -1).unwrap().linf() == 0.0);
    }
}
