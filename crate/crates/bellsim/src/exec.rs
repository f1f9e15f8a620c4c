//! Thread-pool executor for the ensemble runner.

use bellsim_core::Executor;
use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuildError, ThreadPoolBuilder};

/// Runs chunk jobs on a dedicated rayon pool. Results come back in index
/// order, so counts do not depend on the worker count.
pub struct Rayon {
    pool: ThreadPool,
}

impl Rayon {
    /// `workers == 0` lets rayon pick (one per logical CPU).
    pub fn new(workers: usize) -> Result<Self, ThreadPoolBuildError> {
        let pool = ThreadPoolBuilder::new()
            .num_threads(workers)
            .thread_name(|i| format!("bellsim-{i}"))
            .build()?;
        Ok(Self { pool })
    }
}

impl Executor for Rayon {
    fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }

    fn map_indexed<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool
            .install(|| (0..count).into_par_iter().with_min_len(1).map(&f).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use bellsim_core::Serial;

    #[test]
    fn order_matches_serial() {
        let exec = Rayon::new(4).unwrap();
        assert_eq!(exec.workers(), 4);
        let f = |i: usize| i * i + 1;
        assert_eq!(exec.map_indexed(1000, f), Serial.map_indexed(1000, f));
        assert!(exec.map_indexed(0, f).is_empty());
    }
}
