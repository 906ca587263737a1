//! Execution strategy for the data-parallel inner loops.
//!
//! Every batch operation in this crate (validation scans, voice filtering,
//! map clustering, session rollups) is written against [`Execution`]. With the
//! `parallel` feature enabled, [`Execution::Parallel`] fans the loop out over
//! the rayon global pool; without it, both variants run sequentially and
//! produce identical results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
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

impl Execution {
    /// True when this strategy actually runs on more than one thread.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Order-preserving map over a slice.
    pub fn map<'a, T, U, F>(self, items: &'a [T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&'a T) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Order-preserving filter-map over a slice.
    pub fn filter_map<'a, T, U, F>(self, items: &'a [T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&'a T) -> Option<U> + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            return items.par_iter().filter_map(f).collect();
        }
        items.iter().filter_map(f).collect()
    }

    /// Order-preserving flat-map where each item yields a small vector.
    pub fn flat_map<'a, T, U, F>(self, items: &'a [T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&'a T) -> Vec<U> + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            return items.par_iter().flat_map_iter(f).collect();
        }
        items.iter().flat_map(f).collect()
    }

    /// Sort with a total order. Equal keys may be reordered by either
    /// strategy, so callers must supply a comparator with no ties.
    pub fn sort_by<T, F>(self, items: &mut [T], cmp: F)
    where
        T: Send,
        F: Fn(&T, &T) -> std::cmp::Ordering + Sync,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            items.par_sort_unstable_by(cmp);
            return;
        }
        items.sort_unstable_by(cmp);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategies_agree() {
        let xs: Vec<u32> = (0..10_000).collect();
        for exec in [Execution::Sequential, Execution::Parallel] {
            let doubled = exec.map(&xs, |x| x * 2);
            assert_eq!(doubled[9_999], 19_998);
            let odd = exec.filter_map(&xs, |x| (x % 2 == 1).then_some(*x));
            assert_eq!(odd.len(), 5_000);
            assert_eq!(odd[0], 1);
            let pairs = exec.flat_map(&xs[..3], |x| vec![*x, *x]);
            assert_eq!(pairs, vec![0, 0, 1, 1, 2, 2]);
            let mut rev = xs.clone();
            exec.sort_by(&mut rev, |a, b| b.cmp(a));
            assert_eq!(rev[0], 9_999);
        }
    }

    #[test]
    fn sequential_never_reports_parallel() {
        assert!(!Execution::Sequential.is_parallel());
    }
}
