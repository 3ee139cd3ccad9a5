//! Path-parallel execution.
//!
//! Every path owns the random stream `(seed, path index)`, so a path does
//! not depend on which worker generates it. Results are collected in path
//! order and reduced serially, which makes every output independent of
//! the worker count.

use imm_core::path::simulate_path;
use imm_core::{MarketConfig, MarketView, PathSet};
use rayon::prelude::*;

use crate::config::checked;
use crate::error::{AppError, AppResult};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "IMM_THREADS";

/// Available parallelism, capped by `IMM_THREADS` when it holds a positive
/// integer.
pub fn worker_count() -> usize {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    match std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        Some(cap) if cap > 0 => cap.min(available),
        _ => available,
    }
}

pub struct Engine {
    pool: rayon::ThreadPool,
    threads: usize,
}

impl Engine {
    pub fn new(threads: usize) -> AppResult<Self> {
        let threads = threads.max(1);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| AppError::Usage(format!("cannot start {threads} worker threads: {e}")))?;
        Ok(Self { pool, threads })
    }

    /// Engine sized by [`worker_count`].
    pub fn from_env() -> AppResult<Self> {
        Self::new(worker_count())
    }

    pub fn threads(&self) -> usize {
        self.threads
    }

    /// Runs `f` inside the worker pool.
    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        self.pool.install(f)
    }

    /// Validates `cfg` and generates all of its paths.
    pub fn simulate(&self, cfg: &MarketConfig) -> AppResult<PathSet> {
        checked(cfg)?;
        let grid = cfg.time_grid();
        let paths = self.install(|| {
            (0..cfg.paths as u64)
                .into_par_iter()
                .map(|p| simulate_path(cfg, &grid, p))
                .collect::<Result<Vec<_>, _>>()
        })?;
        Ok(PathSet { config: cfg.clone(), grid, paths })
    }

    /// Generates each path, applies `f` to it and drops it. Results are
    /// returned in path order; peak memory is one path per worker.
    pub fn map_paths<T, F>(&self, cfg: &MarketConfig, f: F) -> AppResult<Vec<T>>
    where
        T: Send,
        F: Fn(MarketView<'_>) -> imm_core::error::Result<T> + Sync,
    {
        checked(cfg)?;
        let grid = cfg.time_grid();
        let out = self.install(|| {
            (0..cfg.paths as u64)
                .into_par_iter()
                .map(|p| {
                    let path = simulate_path(cfg, &grid, p)?;
                    f(MarketView { config: cfg, grid: &grid, path: &path })
                })
                .collect::<Result<Vec<_>, _>>()
        })?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use imm_core::simulate_market;

    #[test]
    fn parallel_paths_match_serial_generation() {
        let cfg = MarketConfig::info_minimizing(3, 0.02, 0.4, 0.1).with_grid(1.0, 0.05).with_paths(9, 42);
        let serial = simulate_market(&cfg).unwrap();
        for threads in [1, 3, 8] {
            assert_eq!(Engine::new(threads).unwrap().simulate(&cfg).unwrap(), serial);
        }
    }

    #[test]
    fn map_paths_keeps_path_order() {
        let cfg = MarketConfig::info_minimizing(1, 0.0, 1.0, 0.0).with_grid(0.5, 0.1).with_paths(20, 3);
        let idx = Engine::new(4).unwrap().map_paths(&cfg, |v| Ok(v.path.index)).unwrap();
        assert_eq!(idx, (0..20).collect::<Vec<u64>>());
    }

    #[test]
    fn invalid_config_is_reported_before_simulation() {
        let mut cfg = MarketConfig::info_minimizing(2, 0.0, 1.0, 0.0);
        cfg.paths = 0;
        assert!(matches!(Engine::new(2).unwrap().simulate(&cfg), Err(AppError::InvalidConfig(_))));
    }
}
