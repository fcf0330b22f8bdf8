//! Data-parallel dispatch.
//!
//! Hot loops (matrix assembly rows, grid sweeps, ladder rungs) run through the
//! helpers here. With the `parallel` feature they use rayon; without it, or
//! after `set_parallel(false)`, they fall back to the equivalent sequential
//! loop. Results are bitwise identical either way: work items are independent
//! and no floating-point reduction order changes.

use std::sync::atomic::{AtomicBool, Ordering};

static PARALLEL: AtomicBool = AtomicBool::new(true);

/// Enable or disable the rayon path at runtime (benchmarks toggle this).
pub fn set_parallel(enabled: bool) {
    PARALLEL.store(enabled, Ordering::Relaxed);
}

/// True when the `parallel` feature is compiled in and not disabled at runtime.
pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel") && PARALLEL.load(Ordering::Relaxed)
}

/// Apply `f(row_index, row_slice)` to every `width`-sized row of `data`.
pub fn for_each_row<T, F>(data: &mut [T], width: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    if width == 0 || data.is_empty() {
        return;
    }
    #[cfg(feature = "parallel")]
    if parallel_enabled() {
        use rayon::prelude::*;
        data.par_chunks_mut(width)
            .enumerate()
            .for_each(|(i, row)| f(i, row));
        return;
    }
    for (i, row) in data.chunks_mut(width).enumerate() {
        f(i, row);
    }
}

/// Map `f` over items, preserving order.
pub fn map_collect<I, O, F>(items: &[I], f: F) -> Vec<O>
where
    I: Sync,
    O: Send,
    F: Fn(&I) -> O + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel_enabled() {
        use rayon::prelude::*;
        return items.par_iter().map(&f).collect();
    }
    items.iter().map(f).collect()
}

/// Map `f` over an index range, preserving order.
pub fn map_range<O, F>(n: usize, f: F) -> Vec<O>
where
    O: Send,
    F: Fn(usize) -> O + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel_enabled() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(&f).collect();
    }
    (0..n).map(f).collect()
}
