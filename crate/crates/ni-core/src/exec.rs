//! Data-parallel execution helper.
//!
//! The heavy loops in this crate — frequency sweeps, Sobol sample audits, batches of
//! initial conditions — are embarrassingly parallel. [`map`] runs them through rayon
//! when the crate's default `parallel` feature is on and degrades to a plain
//! sequential loop otherwise, always returning results in input order so that
//! downstream reductions (and CSV output) are deterministic regardless of thread
//! count. [`map_seq`] is always sequential; the bench suite compares the two on the
//! real workloads.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Order-preserving map over a slice, parallel when the `parallel` feature is on.
pub fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Order-preserving sequential map; the baseline the bench suite measures against.
pub fn map_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}
