//! Rayon-backed [`TaskMap`].

use dynacc_core::exec::TaskMap;
use rayon::prelude::*;

/// A dedicated thread pool. Results are collected in task order, so the
/// worker count never changes the output.
#[derive(Debug)]
pub struct RayonPool {
    pool: rayon::ThreadPool,
}

impl RayonPool {
    /// `workers == 0` uses the number of available cores.
    pub fn new(workers: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
        Ok(RayonPool { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl TaskMap for RayonPool {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..n).into_par_iter().map(f).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_task_order() {
        let pool = RayonPool::new(4).unwrap();
        assert_eq!(pool.workers(), 4);
        let out = pool.map(1000, |i| i * i);
        assert!(out.iter().enumerate().all(|(i, &v)| v == i * i));
    }
}
