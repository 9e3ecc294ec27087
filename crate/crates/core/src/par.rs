//! Order-preserving parallel map.
//!
//! With the `parallel` feature (on by default) work runs on rayon. Without
//! it, every [`Parallelism`] setting runs sequentially, so callers never
//! need their own `cfg` switches.

use std::sync::atomic::{AtomicUsize, Ordering};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    /// Rayon's global pool.
    #[default]
    Auto,
    /// A dedicated pool with this many threads.
    Threads(usize),
}

impl Parallelism {
    /// Maps a worker count as given on a command line: 0 means automatic,
    /// 1 means sequential.
    pub fn from_workers(workers: usize) -> Parallelism {
        match workers {
            0 => Parallelism::Auto,
            1 => Parallelism::Sequential,
            n => Parallelism::Threads(n),
        }
    }

    /// Whether this build can run anything in parallel at all.
    pub const fn available() -> bool {
        cfg!(feature = "parallel")
    }

    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        self.map_range(items.len(), |i| f(&items[i]))
    }

    /// `(0..n).map(f)`, results in index order.
    pub fn map_range<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        imp::map_range(self, n, f)
    }
}

/// Counts finished units of work and reports each completion.
pub struct ProgressCounter<'a> {
    done: AtomicUsize,
    total: usize,
    sink: &'a (dyn Fn(usize, usize) + Sync),
}

impl<'a> ProgressCounter<'a> {
    pub fn new(total: usize, sink: &'a (dyn Fn(usize, usize) + Sync)) -> Self {
        ProgressCounter {
            done: AtomicUsize::new(0),
            total,
            sink,
        }
    }

    pub fn advance(&self, units: usize) {
        let done = self.done.fetch_add(units, Ordering::AcqRel) + units;
        (self.sink)(done.min(self.total), self.total);
    }
}

#[cfg(feature = "parallel")]
mod imp {
    use super::Parallelism;
    use rayon::prelude::*;

    pub fn map_range<R, F>(par: Parallelism, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        match par {
            Parallelism::Sequential => (0..n).map(f).collect(),
            Parallelism::Auto => (0..n).into_par_iter().map(f).collect(),
            Parallelism::Threads(threads) => match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
                Ok(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
                Err(_) => (0..n).map(f).collect(),
            },
        }
    }
}

#[cfg(not(feature = "parallel"))]
mod imp {
    use super::Parallelism;

    pub fn map_range<R, F>(_par: Parallelism, n: usize, f: F) -> Vec<R>
    where
        F: Fn(usize) -> R,
    {
        (0..n).map(f).collect()
    }
}
