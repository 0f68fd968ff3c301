//! Seeded parallel Monte Carlo: one ChaCha stream per path, results returned
//! in path order regardless of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;

/// The rng of path `path` under master seed `seed`.
pub fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

/// Runs `f(path_index, rng)` for `n` paths in parallel.
pub fn run_paths<T, F>(n: usize, seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> Result<T> + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|k| {
            let mut rng = path_rng(seed, k as u64);
            f(k, &mut rng)
        })
        .collect()
}

/// Runs `n` paths on a dedicated pool of `threads` workers (0 = default).
pub fn run_paths_in_pool<T, F>(n: usize, seed: u64, threads: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> Result<T> + Sync + Send,
{
    if threads == 0 {
        return run_paths(n, seed, f);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| crate::error::Error::InvalidSpec(e.to_string()))?;
    pool.install(|| run_paths(n, seed, f))
}
