//! Uniform collocation grid on the periodic square `[0, 2π)²` and its integer
//! wavenumber lattice.
//!
//! Layout conventions used everywhere in this crate:
//! * physical values are stored row-major, `values[i * n + j]` holding the
//!   sample at `(x₁, x₂) = (i·h, j·h)` with `h = 2π/n`;
//! * spectral coefficients are stored row-major as well, `coef[a * n + b]`
//!   holding the mode `(k₁, k₂) = (wavenumber(a), wavenumber(b))` of the
//!   expansion `f(x) = Σ_k f̂_k e^{i k·x}` (the forward transform carries the
//!   `1/n²` normalization, so a constant field has zero-mode coefficient equal
//!   to that constant);
//! * index `a ≤ n/2` maps to `k = a`, otherwise `k = a − n`; the self-conjugate
//!   Nyquist line `|k| = n/2` is treated as `+n/2` and is annihilated by the
//!   first-derivative multiplier to keep real fields real.

use crate::error::{Error, Result};

/// Side length of the periodic box.
pub const BOX_LENGTH: f64 = 2.0 * std::f64::consts::PI;

/// Square periodic grid with `n` points per side, `n` a power of two ≥ 16.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TorusGrid {
    n: usize,
}

impl TorusGrid {
    /// Build a grid with `n` points per side. Rejects sizes that are not a
    /// power of two or are smaller than 16.
    pub fn new(n: usize) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidGridSize { n });
        }
        Ok(TorusGrid { n })
    }

    /// Points per side.
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Total number of grid points (`n²`).
    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Mesh width `h = 2π/n`.
    #[inline]
    pub fn h(&self) -> f64 {
        BOX_LENGTH / self.n as f64
    }

    /// Physical coordinate of index `i` along either axis.
    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.h()
    }

    /// Flat index of the sample at `(i, j)`.
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    /// Signed integer wavenumber for spectral index `a` (`0 ≤ a < n`).
    #[inline]
    pub fn wavenumber(&self, a: usize) -> i64 {
        if a <= self.n / 2 {
            a as i64
        } else {
            a as i64 - self.n as i64
        }
    }

    /// Euclidean length of the lattice wavenumber at spectral indices `(a, b)`.
    #[inline]
    pub fn k_norm(&self, a: usize, b: usize) -> f64 {
        let k1 = self.wavenumber(a) as f64;
        let k2 = self.wavenumber(b) as f64;
        k1.hypot(k2)
    }

    /// `|k|²` at spectral indices `(a, b)`.
    #[inline]
    pub fn k_sq(&self, a: usize, b: usize) -> f64 {
        let k1 = self.wavenumber(a) as f64;
        let k2 = self.wavenumber(b) as f64;
        k1 * k1 + k2 * k2
    }

    /// Largest retained `|k_i|` under the 2/3 rule (`⌊n/3⌋`).
    #[inline]
    pub fn dealias_cut(&self) -> i64 {
        (self.n / 3) as i64
    }

    /// Whether the 2/3 rule keeps the mode at spectral indices `(a, b)`.
    #[inline]
    pub fn keeps_mode(&self, a: usize, b: usize) -> bool {
        let cut = self.dealias_cut();
        self.wavenumber(a).abs() <= cut && self.wavenumber(b).abs() <= cut
    }

    /// Largest dyadic block index resolvable on this grid:
    /// `2^{j_max} ≤ n/2 < 2^{j_max + 1}` (so `j_max = log₂(n) − 1`).
    #[inline]
    pub fn j_max(&self) -> i32 {
        (self.n.trailing_zeros() as i32) - 1
    }

    /// Require that `other` is the same grid.
    pub fn ensure_same(&self, other: &TorusGrid) -> Result<()> {
        if self.n == other.n {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                left: self.n,
                right: other.n,
            })
        }
    }
}
