//! Data-parallel execution switch.
//!
//! Kernels split work into disjoint output slices; each slice is computed
//! sequentially, so results are bitwise identical whether the slices run on
//! one thread or many. The `parallel` cargo feature selects the rayon
//! backend at compile time, and [`set_parallel`] turns it off at runtime
//! (benchmarks require a strictly single-threaded mode).

use std::sync::atomic::{AtomicBool, Ordering};

static PARALLEL: AtomicBool = AtomicBool::new(true);

/// Enable or disable the data-parallel fast path at runtime.
pub fn set_parallel(enabled: bool) {
    PARALLEL.store(enabled, Ordering::SeqCst);
}

/// True when the rayon backend is compiled in and runtime-enabled.
pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel") && PARALLEL.load(Ordering::SeqCst)
}

/// Run `f(chunk_index, chunk)` over consecutive chunks of `data`.
///
/// Chunk boundaries do not depend on the thread count, and every chunk is
/// written by exactly one closure call.
pub fn for_each_chunk_mut<E, F>(data: &mut [E], chunk_len: usize, f: F)
where
    E: Send,
    F: Fn(usize, &mut [E]) + Sync,
{
    assert!(chunk_len > 0);
    #[cfg(feature = "parallel")]
    if parallel_enabled() {
        use rayon::prelude::*;
        data.par_chunks_mut(chunk_len)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
        return;
    }
    for (i, c) in data.chunks_mut(chunk_len).enumerate() {
        f(i, c);
    }
}

/// Map chunk indices `0..n` to values and combine them in index order.
/// The fold order is fixed, so reductions stay deterministic.
pub fn map_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    #[cfg(feature = "parallel")]
    if parallel_enabled() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunked_fill_matches_sequential() {
        let mut par = vec![0usize; 103];
        let mut seq = vec![0usize; 103];
        set_parallel(true);
        for_each_chunk_mut(&mut par, 10, |i, c| {
            for (k, x) in c.iter_mut().enumerate() {
                *x = i * 1000 + k;
            }
        });
        set_parallel(false);
        for_each_chunk_mut(&mut seq, 10, |i, c| {
            for (k, x) in c.iter_mut().enumerate() {
                *x = i * 1000 + k;
            }
        });
        set_parallel(true);
        assert_eq!(par, seq);
    }
}
