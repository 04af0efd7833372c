//! Per-k work scheduling.
//!
//! Band computations are embarrassingly parallel over k-points. The core
//! crate stays single-threaded and `no_std`; callers that have threads plug
//! in their own [`Executor`].

use alloc::vec::Vec;

pub trait Executor: Sync {
    /// Evaluates `f(0), …, f(n − 1)` and returns the results in index order.
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs everything on the calling thread.
#[derive(Clone, Copy, Debug, Default)]
pub struct Serial;

impl Executor for Serial {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}
