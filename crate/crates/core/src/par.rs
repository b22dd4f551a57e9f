//! Execution strategy for the data-parallel inner loops.
//!
//! Every parallel loop in the crate is written as an indexed map over a fixed
//! number of work items whose results are collected in index order and then
//! reduced sequentially. The reduction order therefore never depends on the
//! thread schedule, and parallel and sequential runs give identical bits.
//!
//! Parallelism needs the `parallel` cargo feature (on by default). Without it
//! [`Exec::Parallel`] silently runs sequentially.

use serde::{Deserialize, Serialize};

/// How an estimator distributes its work items.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// Maps `f` over `0..n` and returns the results in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            _ => (0..n).map(f).collect(),
        }
    }
}
