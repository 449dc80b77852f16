//! Execution policy for the data-parallel loops (sample sweeps, Harnack
//! grids, parameter tables).
//!
//! Every parallel map here is an indexed map followed by an ordered collect,
//! so results are bit-identical whichever policy runs them.

/// How to run a batch of independent evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecPolicy {
    Sequential,
    /// Uses the rayon global pool when the `parallel` feature is enabled;
    /// otherwise identical to `Sequential`.
    #[default]
    Parallel,
}

impl ExecPolicy {
    /// Whether this policy actually fans out to worker threads in this build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == ExecPolicy::Parallel
    }
}

/// Maps `f` over `items`, preserving order.
pub fn map_slice<T, R, F>(policy: ExecPolicy, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if policy.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = policy;
    items.iter().map(f).collect()
}

/// Maps `f` over `0..len`, preserving order.
pub fn map_range<R, F>(policy: ExecPolicy, len: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if policy.is_parallel() {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = policy;
    (0..len).map(f).collect()
}
