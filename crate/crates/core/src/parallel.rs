//! Execution helper for the data-parallel inner loops.
//!
//! With the `parallel` feature (default) the maps run on the rayon pool;
//! without it they run sequentially. Results are always collected in index
//! order and every reduction happens afterwards on the ordered output, so the
//! two modes produce bit-identical results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Apply `f` to every index in `0..n` and collect the results in order.
pub fn map_indices<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// True when the crate was built with the rayon-backed execution path.
pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
