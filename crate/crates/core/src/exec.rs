//! Execution strategy for the embarrassingly parallel numeric loops.
//!
//! Grid sweeps and independent verification cases are expressed as a map
//! over an index range; [`Parallelism`] selects between a plain sequential
//! loop and a rayon work-stealing loop. The rayon variant exists only with
//! the `parallel` feature (on by default) and is the default strategy when
//! compiled in.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    #[cfg(feature = "parallel")]
    Rayon,
}

#[allow(clippy::derivable_impls)]
impl Default for Parallelism {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Parallelism::Rayon
        }
        #[cfg(not(feature = "parallel"))]
        {
            Parallelism::Sequential
        }
    }
}

/// Maps `f` over `0..n`, preserving index order in the output.
pub fn map_indexed<U, F>(par: Parallelism, n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    match par {
        Parallelism::Sequential => (0..n).map(f).collect(),
        #[cfg(feature = "parallel")]
        Parallelism::Rayon => (0..n).into_par_iter().map(f).collect(),
    }
}
