//! Execution width and the canonical reduction order.
//!
//! Library routines that fan out over independent work items (lattice points,
//! matrix columns, Monte Carlo chunks) take an [`Exec`]. Results are always
//! gathered in item order and reduced with [`tree_sum`], so the output bits do
//! not depend on how many workers ran.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Environment variable read by [`Exec::from_env`]; `1` forces serial runs.
pub const WORKERS_ENV: &str = "COHERENT_TORUS_WORKERS";

/// Default cap on the number of complex values a materialized phase-space
/// field may hold (2^26, about 1 GiB).
pub const DEFAULT_PHASE_SPACE_CAP: usize = 1 << 26;

/// Items per chunk in chunked reductions. Fixed so the reduction tree is
/// identical for every worker count.
const REDUCE_CHUNK: usize = 64;

#[derive(Clone)]
pub struct Exec {
    pool: Option<Arc<rayon::ThreadPool>>,
    workers: usize,
    phase_space_cap: usize,
}

impl std::fmt::Debug for Exec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Exec")
            .field("workers", &self.workers)
            .field("phase_space_cap", &self.phase_space_cap)
            .finish()
    }
}

impl Default for Exec {
    fn default() -> Self {
        Self::serial()
    }
}

impl Exec {
    pub fn serial() -> Self {
        Self {
            pool: None,
            workers: 1,
            phase_space_cap: DEFAULT_PHASE_SPACE_CAP,
        }
    }

    pub fn with_workers(workers: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::invalid("worker count must be at least 1"));
        }
        if workers == 1 {
            return Ok(Self::serial());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
        Ok(Self {
            pool: Some(Arc::new(pool)),
            workers,
            phase_space_cap: DEFAULT_PHASE_SPACE_CAP,
        })
    }

    /// Worker count from [`WORKERS_ENV`], defaulting to the available parallelism.
    pub fn from_env() -> Result<Self> {
        let workers = match std::env::var(WORKERS_ENV) {
            Ok(v) => v
                .trim()
                .parse::<usize>()
                .map_err(|_| Error::invalid(format!("{WORKERS_ENV}={v} is not a positive integer")))?,
            Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
        };
        Self::with_workers(workers)
    }

    pub fn with_phase_space_cap(mut self, cap: usize) -> Self {
        self.phase_space_cap = cap;
        self
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn phase_space_cap(&self) -> usize {
        self.phase_space_cap
    }

    /// Maps `f` over `0..len`, returning results in index order.
    pub fn map_range<U, F>(&self, len: usize, f: F) -> Vec<U>
    where
        U: Send,
        F: Fn(usize) -> U + Sync + Send,
    {
        match &self.pool {
            None => (0..len).map(f).collect(),
            Some(pool) => pool.install(|| (0..len).into_par_iter().map(f).collect()),
        }
    }

    pub fn map<T, U, F>(&self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        match &self.pool {
            None => items.iter().map(f).collect(),
            Some(pool) => pool.install(|| items.par_iter().map(f).collect()),
        }
    }

    /// Sums `f(i)` for `i in 0..len` elementwise, with a fixed chunking and
    /// pairwise tree so the result is bit-identical for any worker count.
    pub fn sum_vectors<F>(&self, len: usize, dim: usize, f: F) -> Vec<Complex64>
    where
        F: Fn(usize) -> Vec<Complex64> + Sync + Send,
    {
        let chunks = len.div_ceil(REDUCE_CHUNK);
        let partials = self.map_range(chunks, |c| {
            let lo = c * REDUCE_CHUNK;
            let hi = (lo + REDUCE_CHUNK).min(len);
            tree_sum((lo..hi).map(&f).collect(), dim)
        });
        tree_sum(partials, dim)
    }
}

/// Canonical pairwise reduction: adjacent pairs are summed level by level.
pub fn tree_sum(mut parts: Vec<Vec<Complex64>>, dim: usize) -> Vec<Complex64> {
    if parts.is_empty() {
        return vec![Complex64::new(0.0, 0.0); dim];
    }
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                for (x, y) in a.iter_mut().zip(&b) {
                    *x += *y;
                }
            }
            next.push(a);
        }
        parts = next;
    }
    parts.pop().unwrap_or_default()
}

/// Pairwise sum of scalars in the same canonical order as [`tree_sum`].
pub fn tree_sum_f64(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => tree_sum_f64(&values[..n / 2]) + tree_sum_f64(&values[n / 2..]),
    }
}
