//! Pluggable execution of independent jobs.
//!
//! Per-graph gradient chunks and cross-validation folds are independent; an
//! [`Executor`] decides whether they run sequentially or on a thread pool.
//! Results always come back in index order and every reduction over them is
//! done in that order by the caller, so the numbers do not depend on the
//! executor.

use alloc::vec::Vec;

pub trait Executor: Sync {
    /// Evaluates `f(0), ..., f(len - 1)` and returns the results in index order.
    fn map<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;

    /// Monotonic seconds, when the platform has a clock.
    fn now_secs(&self) -> Option<f64> {
        None
    }
}

/// Runs everything on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..len).map(f).collect()
    }
}
