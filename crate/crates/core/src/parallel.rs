//! Job-level parallelism on a dedicated rayon pool.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Maps `f` over `items` on at most `workers` threads (0 = one per core),
/// keeping input order. The first error in input order is returned.
pub fn par_map<T, R, F>(items: &[T], workers: usize, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    pool.install(|| items.par_iter().map(f).collect())
}
