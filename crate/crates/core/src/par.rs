//! Data-parallel helpers.
//!
//! With the `parallel` feature (default) the helpers fan out over rayon's
//! pool. Without it, or inside [`with_jobs`] with `Jobs::Sequential`, every
//! map runs in order on the calling thread. Results are always returned in
//! input order so outputs never depend on scheduling.

use std::cell::Cell;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

thread_local! {
    static SEQUENTIAL: Cell<bool> = const { Cell::new(false) };
}

/// Worker-pool selection for a unit of work.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Jobs {
    /// Use the global pool (all cores).
    #[default]
    All,
    /// Run on the calling thread only.
    Sequential,
    /// Dedicated pool of N threads.
    Threads(usize),
}

impl Jobs {
    /// Maps a `--jobs N` flag: 0 means all cores, 1 means sequential.
    pub fn from_count(n: usize) -> Self {
        match n {
            0 => Jobs::All,
            1 => Jobs::Sequential,
            n => Jobs::Threads(n),
        }
    }
}

/// Runs `f` under the requested worker configuration.
pub fn with_jobs<R: Send>(jobs: Jobs, f: impl FnOnce() -> R + Send) -> R {
    match jobs {
        Jobs::All => f(),
        Jobs::Sequential => {
            let prev = SEQUENTIAL.with(|s| s.replace(true));
            let out = f();
            SEQUENTIAL.with(|s| s.set(prev));
            out
        }
        #[cfg(feature = "parallel")]
        Jobs::Threads(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        #[cfg(not(feature = "parallel"))]
        Jobs::Threads(_) => f(),
    }
}

fn sequential() -> bool {
    !cfg!(feature = "parallel") || SEQUENTIAL.with(|s| s.get())
}

/// Order-preserving map over a slice.
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if sequential() {
        return items.iter().map(f).collect();
    }
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Order-preserving map over `0..n`.
pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    if sequential() {
        return (0..n).map(f).collect();
    }
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved_in_every_mode() {
        let items: Vec<u64> = (0..1000).collect();
        let expect: Vec<u64> = items.iter().map(|v| v * v).collect();
        for jobs in [Jobs::All, Jobs::Sequential, Jobs::Threads(3)] {
            let got = with_jobs(jobs, || map(&items, |v| v * v));
            assert_eq!(got, expect);
            let got = with_jobs(jobs, || map_range(items.len(), |i| (i * i) as u64));
            assert_eq!(got, expect);
        }
    }

    #[test]
    fn sequential_flag_is_restored() {
        with_jobs(Jobs::Sequential, || assert!(sequential()));
        assert_eq!(sequential(), !cfg!(feature = "parallel"));
    }
}
