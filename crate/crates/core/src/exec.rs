//! Sequential / data-parallel execution of independent work items.
//!
//! Every helper returns results that do not depend on scheduling: mapped
//! outputs keep index order, and arg-max reductions break ties by the lowest
//! index. Without the `parallel` feature, [`Execution::Parallel`] runs
//! sequentially.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// `(0..n).map(f).collect()`, in index order.
pub fn map_indexed<T, F>(exec: Execution, n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

fn better(a: (u64, f64), b: (u64, f64)) -> (u64, f64) {
    if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
        b
    } else {
        a
    }
}

/// Index and value of the largest `f(i)` over `0..n`, skipping `None` and NaN.
/// Ties resolve to the lowest index.
pub fn argmax<F>(exec: Execution, n: u64, f: F) -> Option<(u64, f64)>
where
    F: Fn(u64) -> Option<f64> + Sync + Send,
{
    let eval = |i: u64| f(i).filter(|v| !v.is_nan()).map(|v| (i, v));
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().filter_map(eval).reduce_with(better)
        }
        _ => (0..n).filter_map(eval).reduce(better),
    }
}
