//! Thin wrappers that run independent work items in parallel when the
//! `parallel` feature is enabled and sequentially otherwise.
//!
//! Only bitwise-independent units go through these helpers (FFT lines, dyadic
//! blocks, ensemble samples, pointwise maps over disjoint chunks). Floating
//! point reductions are kept sequential everywhere so that results are
//! bit-identical regardless of feature flags or thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Apply `f` to each length-`chunk` row of `data` (disjoint, in place).
pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        data.par_chunks_mut(chunk)
            .enumerate()
            .for_each(|(i, row)| f(i, row));
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (i, row) in data.chunks_mut(chunk).enumerate() {
            f(i, row);
        }
    }
}

/// Collect `f(0..len)` preserving index order.
pub fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}
