//! Cached 2-D FFT built from rustfft 1-D plans.
//!
//! The forward transform maps nodal samples to Fourier coefficients of
//! `f(x) = Σ_k f̂_k e^{i k·x}` (it carries the `1/n²` normalization); the
//! inverse is the plain synthesis sum, so forward∘inverse is the identity to
//! rounding. Rows are transformed independently and are dispatched through the
//! `par` helpers; each line transform is bitwise deterministic, so results do
//! not depend on thread count.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::{Fft, FftPlanner};

use crate::grid::TorusGrid;
use crate::par;

pub type C64 = rustfft::num_complex::Complex<f64>;

struct Plans {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

fn plans(n: usize) -> Arc<Plans> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plans>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Plans {
                fwd: planner.plan_fft_forward(n),
                inv: planner.plan_fft_inverse(n),
            })
        })
        .clone()
}

/// In-place square transpose.
fn transpose(data: &mut [C64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

fn line_pass(data: &mut [C64], n: usize, plan: &Arc<dyn Fft<f64>>) {
    par::for_each_chunk_mut(data, n, |_, row| {
        let mut scratch = vec![C64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(row, &mut scratch);
    });
}

/// Physical samples → Fourier coefficients (normalized by `1/n²`).
pub fn forward(grid: &TorusGrid, data: &mut [C64]) {
    let n = grid.n();
    debug_assert_eq!(data.len(), grid.len());
    let plans = plans(n);
    line_pass(data, n, &plans.fwd); // transform x₂ lines
    transpose(data, n);
    line_pass(data, n, &plans.fwd); // transform x₁ lines
    transpose(data, n);
    let scale = 1.0 / (n * n) as f64;
    par::for_each_chunk_mut(data, n, |_, row| {
        for v in row {
            *v *= scale;
        }
    });
}

/// Fourier coefficients → physical samples (plain synthesis sum).
pub fn inverse(grid: &TorusGrid, data: &mut [C64]) {
    let n = grid.n();
    debug_assert_eq!(data.len(), grid.len());
    let plans = plans(n);
    line_pass(data, n, &plans.inv);
    transpose(data, n);
    line_pass(data, n, &plans.inv);
    transpose(data, n);
}
