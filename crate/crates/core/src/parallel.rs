//! Deterministic fan-out over path indices.
//!
//! Work is cut into fixed-size chunks independent of the worker count and the
//! results are concatenated in index order, so outputs do not depend on how
//! many threads ran them.

pub const CHUNK: u64 = 256;

/// Maps `f` over `start..end`. `init` builds per-chunk scratch state.
pub fn map_indexed<S, T, I, F>(start: u64, end: u64, workers: usize, init: I, f: F) -> Vec<T>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, u64) -> T + Sync + Send,
{
    let n_chunks = (end.saturating_sub(start)).div_ceil(CHUNK);
    let run_chunk = |c: u64| -> Vec<T> {
        let lo = start + c * CHUNK;
        let hi = (lo + CHUNK).min(end);
        let mut state = init();
        (lo..hi).map(|i| f(&mut state, i)).collect()
    };
    let chunks: Vec<Vec<T>> = run_chunks(n_chunks, workers, &run_chunk);
    chunks.into_iter().flatten().collect()
}

#[cfg(feature = "parallel")]
fn run_chunks<T: Send>(n_chunks: u64, workers: usize, run: &(dyn Fn(u64) -> Vec<T> + Sync)) -> Vec<Vec<T>> {
    use rayon::prelude::*;
    if workers == 1 || n_chunks <= 1 {
        return (0..n_chunks).map(run).collect();
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if workers > 0 {
        builder = builder.num_threads(workers);
    }
    match builder.build() {
        Ok(pool) => pool.install(|| (0..n_chunks).into_par_iter().map(run).collect()),
        Err(_) => (0..n_chunks).map(run).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_chunks<T: Send>(n_chunks: u64, _workers: usize, run: &(dyn Fn(u64) -> Vec<T> + Sync)) -> Vec<Vec<T>> {
    (0..n_chunks).map(run).collect()
}
