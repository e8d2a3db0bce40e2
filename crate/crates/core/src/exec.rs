//! Chunked evaluation strategy for Monte Carlo sums.

use alloc::vec::Vec;

/// Evaluates `f(0), …, f(n−1)` and returns the results in index order.
///
/// Implementations may run the calls concurrently; callers reduce the
/// returned vector sequentially, so the final sums do not depend on the
/// executor.
pub trait Executor: Sync {
    fn map_chunks<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs every chunk on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Serial;

impl Executor for Serial {
    fn map_chunks<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}
