//! Execution strategy for data-parallel inner loops.
//!
//! With the `parallel` feature (default), [`map_range`] fans out over the
//! rayon thread pool; without it, it degrades to the sequential loop.
//! [`map_range_seq`] is always the plain sequential loop so benchmarks can
//! compare both strategies in the same build.
//!
//! Work items must be independent: all callers map pure functions over an
//! index range, so results are identical under either strategy.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..n`, collecting results in index order.
#[cfg(feature = "parallel")]
pub fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Map `f` over `0..n`, collecting results in index order.
#[cfg(not(feature = "parallel"))]
pub fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Sequential fallback, available regardless of features.
pub fn map_range_seq<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}
