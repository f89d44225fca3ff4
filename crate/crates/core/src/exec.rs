//! Per-triangle work distribution.

use alloc::vec::Vec;

/// Maps `f` over `0..n`, returning results in index order.
///
/// Implementations may run `f` concurrently; callers reduce the returned
/// vector in a fixed order so results do not depend on the executor.
pub trait Executor: Sync {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}
