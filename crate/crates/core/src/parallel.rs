use crate::error::{Result, SieveError};

/// Runs `f` inside a dedicated rayon pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Err(SieveError::Param("worker count must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| SieveError::Param(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}
