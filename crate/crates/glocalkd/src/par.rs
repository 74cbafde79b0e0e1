//! Rayon-backed [`Executor`].

use std::time::Instant;

use glocalkd_core::Executor;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// A dedicated thread pool. Results come back in index order, so numbers
/// match [`glocalkd_core::Sequential`] exactly.
pub struct Pool {
    pool: rayon::ThreadPool,
    start: Instant,
}

impl Pool {
    /// `jobs = None` uses one worker per available CPU.
    pub fn new(jobs: Option<usize>) -> Result<Self> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = jobs {
            if n == 0 {
                return Err(Error::Config("jobs must be >= 1".into()));
            }
            builder = builder.num_threads(n);
        }
        let pool = builder
            .build()
            .map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))?;
        Ok(Self {
            pool,
            start: Instant::now(),
        })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for Pool {
    fn map<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..len).into_par_iter().map(f).collect())
    }

    fn now_secs(&self) -> Option<f64> {
        Some(self.start.elapsed().as_secs_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use glocalkd_core::Sequential;

    #[test]
    fn order_matches_sequential() {
        let pool = Pool::new(Some(3)).unwrap();
        let f = |i: usize| (i * i) as f64 / 7.0;
        assert_eq!(pool.map(100, f), Sequential.map(100, f));
        assert!(pool.now_secs().is_some());
        assert!(Pool::new(Some(0)).is_err());
    }
}
