//! Parallel execution control.
//!
//! All data-parallel loops in the crate go through [`run_indexed`], which maps
//! an index range to values and returns them in index order. Reductions over
//! the results always happen sequentially afterwards, so output is bit-for-bit
//! identical whether work ran on one thread or many.
//!
//! With the `parallel` feature disabled the crate compiles without rayon and
//! every call takes the sequential path.

use std::sync::atomic::{AtomicUsize, Ordering};

/// Worker count: 0 means "library default" (rayon's pool size when the
/// `parallel` feature is on, otherwise 1). 1 forces the sequential path.
static JOBS: AtomicUsize = AtomicUsize::new(0);

/// Sets the worker count for subsequent parallel sections. `0` restores the
/// default. This is a process-global switch, intended to be set once at
/// startup (the CLI's `--jobs` flag).
pub fn set_jobs(n: usize) {
    JOBS.store(n, Ordering::SeqCst);
}

/// Resolved worker count for the current configuration.
pub fn jobs() -> usize {
    let n = JOBS.load(Ordering::SeqCst);
    #[cfg(feature = "parallel")]
    {
        if n == 0 {
            rayon::current_num_threads()
        } else {
            n
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
        1
    }
}

/// Maps `f` over `0..n`, returning results in index order.
pub fn run_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if jobs() > 1 {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    (0..n).map(f).collect()
}

/// Fills a flat `rows * cols` row-major buffer, parallelizing over rows.
pub fn fill_rows<F>(rows: usize, cols: usize, f: F) -> Vec<f64>
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if jobs() > 1 {
            use rayon::prelude::*;
            let mut buf = vec![0.0; rows * cols];
            buf.par_chunks_mut(cols).enumerate().for_each(|(i, row)| f(i, row));
            return buf;
        }
    }
    let mut buf = vec![0.0; rows * cols];
    for (i, row) in buf.chunks_mut(cols).enumerate() {
        f(i, row);
    }
    buf
}
