//! Execution policy for the data-parallel loops (multistarts, rate grids,
//! anchors, Monte Carlo trials).
//!
//! Every parallel map collects results in input order, so reductions done
//! afterwards are independent of the worker count. Without the `parallel`
//! feature, [`Exec::Parallel`] silently runs sequentially.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exec {
    #[default]
    Parallel,
    Sequential,
}

impl Exec {
    /// Maps `f` over `0..len`, returning results in index order.
    pub fn map_range<T, F>(self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                (0..len).into_par_iter().map(f).collect()
            }
            _ => (0..len).map(f).collect(),
        }
    }

    /// Maps `f` over a slice, returning results in slice order.
    pub fn map_slice<S, T, F>(self, items: &[S], f: F) -> Vec<T>
    where
        S: Sync,
        T: Send,
        F: Fn(&S) -> T + Sync + Send,
    {
        self.map_range(items.len(), |i| f(&items[i]))
    }

    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Configures the global worker pool from `COGMAC_THREADS` when set.
/// Safe to call more than once; only the first call has an effect.
pub fn init_thread_pool_from_env() {
    #[cfg(feature = "parallel")]
    if let Some(n) = std::env::var("COGMAC_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_policies_preserve_order() {
        let a = Exec::Parallel.map_range(100, |i| i * i);
        let b = Exec::Sequential.map_range(100, |i| i * i);
        assert_eq!(a, b);
    }
}
