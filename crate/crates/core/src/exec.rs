//! Execution policy for the data-parallel loops (Monte Carlo batches,
//! replica simulation, parameter sweeps).
//!
//! With the `parallel` feature the [`Execution::Parallel`] policy runs on the
//! rayon pool; without it every policy degrades to the sequential loop, so
//! results never depend on the feature set. Work items are indexed and each
//! one derives its own state from its index, which keeps outputs identical
//! across policies.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when this policy actually fans out across threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Map `f` over `0..len`, preserving index order in the output.
    pub fn map<T, F>(self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            return (0..len).into_par_iter().map(f).collect();
        }
        (0..len).map(f).collect()
    }
}
