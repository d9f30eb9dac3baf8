//! Sequential / parallel execution switch.
//!
//! Hot loops (pair scoring, batch embedding, per-file extraction) are written
//! once against [`Execution`]. With the `parallel` feature enabled (the
//! default) they can run on the rayon pool; without it only the sequential
//! path is compiled and behaviour is identical.
//!
//! Every helper here returns results in input order, so callers observe the
//! same output regardless of the chosen mode.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How data-parallel work is scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Execution {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}

impl Execution {
    /// Every mode compiled into this build.
    pub fn available() -> Vec<Execution> {
        vec![
            Execution::Sequential,
            #[cfg(feature = "parallel")]
            Execution::Parallel,
        ]
    }

    pub fn name(self) -> &'static str {
        match self {
            Execution::Sequential => "sequential",
            #[cfg(feature = "parallel")]
            Execution::Parallel => "parallel",
        }
    }

    /// Maps `f` over `items`, preserving order.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            Execution::Sequential => items.iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => items.par_iter().map(f).collect(),
        }
    }

    /// Maps `f` over `0..n`, preserving order.
    pub fn map_range<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
        }
    }

    /// Folds `0..n` into per-worker accumulators and merges them.
    ///
    /// `merge` must be associative and `identity` its neutral element.
    pub fn fold_range<A, Id, F, M>(self, n: usize, identity: Id, fold: F, merge: M) -> A
    where
        A: Send,
        Id: Fn() -> A + Sync + Send,
        F: Fn(A, usize) -> A + Sync + Send,
        M: Fn(A, A) -> A + Sync + Send,
    {
        match self {
            Execution::Sequential => merge(identity(), (0..n).fold(identity(), fold)),
            #[cfg(feature = "parallel")]
            Execution::Parallel => (0..n)
                .into_par_iter()
                .fold(&identity, &fold)
                .reduce(&identity, &merge),
        }
    }
}

impl std::fmt::Display for Execution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_on_map_and_fold() {
        let data: Vec<u64> = (0..1000).collect();
        let expected: Vec<u64> = data.iter().map(|x| x * x).collect();
        for mode in Execution::available() {
            assert_eq!(mode.map(&data, |x| x * x), expected);
            assert_eq!(mode.map_range(1000, |i| (i as u64) * (i as u64)), expected);
            let sum = mode.fold_range(1000, || 0u64, |acc, i| acc + i as u64, |a, b| a + b);
            assert_eq!(sum, 499_500);
        }
    }
}
