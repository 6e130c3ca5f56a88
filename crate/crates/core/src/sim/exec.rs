use serde::{Deserialize, Serialize};

/// How independent trials are scheduled. Both modes return results in trial
/// order and, since every trial owns its RNG streams, identical values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

/// Maps `f` over trial indices `0..trials`.
pub fn map_trials<T, F>(exec: Execution, trials: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    match exec {
        Execution::Sequential => (0..trials as u64).map(f).collect(),
        Execution::Parallel => parallel(trials, f),
    }
}

#[cfg(feature = "parallel")]
fn parallel<T, F>(trials: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..trials as u64).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn parallel<T, F>(trials: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..trials as u64).map(f).collect()
}
