//! Scalar and vector fields with paired physical / spectral representations.
//!
//! `ScalarField` stores real nodal samples; `Spectrum` stores the complex
//! Fourier coefficients of a real field (conjugate-symmetric by construction:
//! every operation that manufactures coefficients applies a real, radially
//! even multiplier or takes the real part after synthesis).

use crate::error::{Error, Result};
use crate::fft::{self, C64};
use crate::grid::TorusGrid;
use crate::par;

/// Real-valued field sampled on the collocation grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: TorusGrid) -> Self {
        ScalarField {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: TorusGrid, c: f64) -> Self {
        ScalarField {
            grid,
            values: vec![c; grid.len()],
        }
    }

    /// Sample a closed-form `f(x₁, x₂)` on the grid.
    pub fn from_fn(grid: TorusGrid, f: impl Fn(f64, f64) -> f64 + Sync) -> Self {
        let n = grid.n();
        let mut values = vec![0.0; grid.len()];
        par::for_each_chunk_mut(&mut values, n, |i, row| {
            let x1 = grid.x(i);
            for (j, v) in row.iter_mut().enumerate() {
                *v = f(x1, grid.x(j));
            }
        });
        ScalarField { grid, values }
    }

    pub fn from_values(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} samples for an n = {} grid, got {}",
                grid.len(),
                grid.n(),
                values.len()
            )));
        }
        Ok(ScalarField { grid, values })
    }

    #[inline]
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Forward transform to Fourier coefficients.
    pub fn to_spectrum(&self) -> Spectrum {
        let mut coef: Vec<C64> = self.values.iter().map(|&v| C64::new(v, 0.0)).collect();
        fft::forward(&self.grid, &mut coef);
        Spectrum {
            grid: self.grid,
            coef,
        }
    }

    /// Pointwise map of the samples.
    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync) -> ScalarField {
        let mut out = self.clone();
        par::for_each_chunk_mut(&mut out.values, self.grid.n(), |_, row| {
            for v in row {
                *v = f(*v);
            }
        });
        out
    }

    /// `self += s · other` (same grid required).
    pub fn add_scaled(&mut self, other: &ScalarField, s: f64) {
        assert_eq!(self.grid, other.grid, "field arithmetic across grids");
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.values {
            *v *= s;
        }
    }

    /// Grid-quadrature Lᵖ norm: `(h² Σ |f|ᵖ)^{1/p}`, sup norm for `p = ∞`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        assert!(p >= 1.0, "Lᵖ norm needs p ≥ 1, got {p}");
        if p.is_infinite() {
            return self.values.iter().fold(0.0, |m, v| m.max(v.abs()));
        }
        let h2 = self.grid.h() * self.grid.h();
        let sum: f64 = self.values.iter().map(|v| v.abs().powf(p)).sum();
        (h2 * sum).powf(1.0 / p)
    }

    #[inline]
    pub fn linf(&self) -> f64 {
        self.lp_norm(f64::INFINITY)
    }

    #[inline]
    pub fn l2(&self) -> f64 {
        let h2 = self.grid.h() * self.grid.h();
        let sum: f64 = self.values.iter().map(|v| v * v).sum();
        (h2 * sum).sqrt()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Sup-norm distance to another field.
    pub fn linf_distance(&self, other: &ScalarField) -> f64 {
        assert_eq!(self.grid, other.grid, "field arithmetic across grids");
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Nodal (collocation) product, no dealiasing. Exact when the factors' bands
/// sum to at most the Nyquist index.
pub fn mul_nodal(a: &ScalarField, b: &ScalarField) -> ScalarField {
    assert_eq!(a.grid, b.grid, "field arithmetic across grids");
    let mut out = a.clone();
    for (v, w) in out.values.iter_mut().zip(&b.values) {
        *v *= w;
    }
    out
}

/// Nodal product followed by the 2/3-rule projection: modes with
/// `max(|k₁|, |k₂|) > n/3` are zeroed. For inputs already band-limited to the
/// kept cube the retained modes are exact (no aliasing can reach them).
pub fn mul_dealiased(a: &ScalarField, b: &ScalarField) -> ScalarField {
    let mut s = mul_nodal(a, b).to_spectrum();
    s.dealias();
    s.to_field()
}

/// Project a field onto the 2/3-rule cube.
pub fn dealias_field(f: &ScalarField) -> ScalarField {
    let mut s = f.to_spectrum();
    s.dealias();
    s.to_field()
}

/// Fourier coefficients of a real field.
#[derive(Clone, Debug)]
pub struct Spectrum {
    grid: TorusGrid,
    coef: Vec<C64>,
}

impl Spectrum {
    pub fn zeros(grid: TorusGrid) -> Self {
        Spectrum {
            grid,
            coef: vec![C64::new(0.0, 0.0); grid.len()],
        }
    }

    #[inline]
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    #[inline]
    pub fn coef(&self) -> &[C64] {
        &self.coef
    }

    #[inline]
    pub fn coef_mut(&mut self) -> &mut [C64] {
        &mut self.coef
    }

    /// Inverse transform; the imaginary residue of the synthesis is dropped.
    pub fn to_field(&self) -> ScalarField {
        let mut data = self.coef.clone();
        fft::inverse(&self.grid, &mut data);
        ScalarField {
            grid: self.grid,
            values: data.into_iter().map(|c| c.re).collect(),
        }
    }

    /// Multiply each mode by a real factor `w(a, b)` of the spectral indices.
    pub fn apply_mask(&mut self, w: impl Fn(usize, usize) -> f64 + Sync) {
        let n = self.grid.n();
        par::for_each_chunk_mut(&mut self.coef, n, |a, row| {
            for (b, c) in row.iter_mut().enumerate() {
                *c *= w(a, b);
            }
        });
    }

    /// Zero every mode with `max(|k₁|, |k₂|) > n/3`.
    pub fn dealias(&mut self) {
        let grid = self.grid;
        self.apply_mask(|a, b| if grid.keeps_mode(a, b) { 1.0 } else { 0.0 });
    }

    /// Largest `max(|k₁|, |k₂|)` carrying a coefficient above `tol`.
    pub fn band_max(&self, tol: f64) -> i64 {
        let n = self.grid.n();
        let mut band = 0i64;
        for a in 0..n {
            for b in 0..n {
                if self.coef[a * n + b].norm() > tol {
                    let m = self
                        .grid
                        .wavenumber(a)
                        .abs()
                        .max(self.grid.wavenumber(b).abs());
                    band = band.max(m);
                }
            }
        }
        band
    }

    /// Worst violation of conjugate symmetry `f̂(−k) = conj(f̂(k))`.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let n = self.grid.n();
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                let am = (n - a) % n;
                let bm = (n - b) % n;
                let d = (self.coef[a * n + b] - self.coef[am * n + bm].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Spectral ℓ² energy `Σ_k |f̂_k|²` (for Parseval checks).
    pub fn energy(&self) -> f64 {
        self.coef.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Two-component real field; `x` is the first (u¹) and `y` the second (u²)
/// component.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub x: ScalarField,
    pub y: ScalarField,
}

impl VectorField {
    pub fn zeros(grid: TorusGrid) -> Self {
        VectorField {
            x: ScalarField::zeros(grid),
            y: ScalarField::zeros(grid),
        }
    }

    pub fn new(x: ScalarField, y: ScalarField) -> Self {
        assert_eq!(x.grid, y.grid, "vector components on different grids");
        VectorField { x, y }
    }

    pub fn from_fns(
        grid: TorusGrid,
        fx: impl Fn(f64, f64) -> f64 + Sync,
        fy: impl Fn(f64, f64) -> f64 + Sync,
    ) -> Self {
        VectorField {
            x: ScalarField::from_fn(grid, fx),
            y: ScalarField::from_fn(grid, fy),
        }
    }

    #[inline]
    pub fn grid(&self) -> &TorusGrid {
        self.x.grid()
    }

    /// Sup of the pointwise Euclidean magnitude.
    pub fn linf(&self) -> f64 {
        self.x
            .values
            .iter()
            .zip(&self.y.values)
            .fold(0.0, |m, (a, b)| m.max(a.hypot(*b)))
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn add_scaled(&mut self, other: &VectorField, s: f64) {
        self.x.add_scaled(&other.x, s);
        self.y.add_scaled(&other.y, s);
    }

    pub fn scale(&mut self, s: f64) {
        self.x.scale(s);
        self.y.scale(s);
    }

    pub fn linf_distance(&self, other: &VectorField) -> f64 {
        self.x
            .linf_distance(&other.x)
            .max(self.y.linf_distance(&other.y))
    }

    /// Pointwise dot product with another vector field (nodal).
    pub fn dot_nodal(&self, other: &VectorField) -> ScalarField {
        let mut out = mul_nodal(&self.x, &other.x);
        let yy = mul_nodal(&self.y, &other.y);
        out.add_scaled(&yy, 1.0);
        out
    }
}
