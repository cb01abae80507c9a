//! Order-preserving parallel map with a sequential fallback.
//!
//! Results always come back in input order, so any reduction done by the
//! caller afterwards is deterministic regardless of thread scheduling.

/// How many worker threads to use. `jobs == 1` is strictly sequential;
/// `jobs == 0` uses the global rayon pool.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Executor {
    jobs: usize,
}

impl Executor {
    pub fn sequential() -> Self {
        Self { jobs: 1 }
    }

    pub fn with_jobs(jobs: usize) -> Self {
        Self { jobs }
    }

    pub fn jobs(&self) -> usize {
        self.jobs
    }

    pub fn is_parallel(&self) -> bool {
        cfg!(feature = "parallel") && self.jobs != 1
    }

    pub fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            match self.jobs {
                1 => items.iter().map(f).collect(),
                0 => items.par_iter().map(f).collect(),
                n => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                    Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
                    Err(_) => items.iter().map(f).collect(),
                },
            }
        }
        #[cfg(not(feature = "parallel"))]
        {
            items.iter().map(f).collect()
        }
    }

    /// Like [`Executor::map`] but stops at the first error in input order.
    pub fn try_map<T, R, E, F>(&self, items: &[T], f: F) -> Result<Vec<R>, E>
    where
        T: Sync,
        R: Send,
        E: Send,
        F: Fn(&T) -> Result<R, E> + Sync + Send,
    {
        self.map(items, f).into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let items: Vec<u64> = (0..1000).collect();
        let seq = Executor::sequential().map(&items, |x| x * x);
        let par = Executor::default().map(&items, |x| x * x);
        let two = Executor::with_jobs(2).map(&items, |x| x * x);
        assert_eq!(seq, par);
        assert_eq!(seq, two);
    }
}
