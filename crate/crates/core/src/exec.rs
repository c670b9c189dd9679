//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature the helpers dispatch onto the current rayon pool
//! (callers pick the thread count with `ThreadPool::install`). Without it they run
//! on the calling thread. Both paths split work into chunks of [`CHUNK`] items and
//! return per-chunk results in input order, so any fold over the output is
//! independent of the number of worker threads.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Fixed work-unit size for chunked reductions.
pub const CHUNK: usize = 32;

/// Maps every item, preserving order.
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Applies `f` to consecutive chunks of `chunk` items and returns the chunk
/// results in order.
pub fn map_chunks<T, R, F>(items: &[T], chunk: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &[T]) -> R + Sync + Send,
{
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    {
        items
            .par_chunks(chunk)
            .enumerate()
            .map(|(i, c)| f(i * chunk, c))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items
            .chunks(chunk)
            .enumerate()
            .map(|(i, c)| f(i * chunk, c))
            .collect()
    }
}

/// Chunked map followed by an in-order fold of the chunk results.
pub fn map_reduce<T, A, M, R>(items: &[T], init: A, map: M, reduce: R) -> A
where
    T: Sync,
    A: Send,
    M: Fn(usize, &[T]) -> A + Sync + Send,
    R: FnMut(A, A) -> A,
{
    map_chunks(items, CHUNK, map)
        .into_iter()
        .fold(init, reduce)
}

/// Number of worker threads the current context would use.
pub fn current_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// Runs `f` on a dedicated pool of `threads` workers (0 = all cores). Without
/// the `parallel` feature `f` runs on the calling thread.
pub fn with_threads<R, F>(threads: usize, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    {
        match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => pool.install(f),
            Err(e) => {
                log::warn!("could not build a {threads}-thread pool ({e}); using the global pool");
                f()
            }
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}
