//! Per-k parallelism on a rayon pool.

use bandlab_core::Executor;
use rayon::prelude::*;

/// Runs independent tasks on a dedicated rayon pool; results keep task order.
pub struct RayonExecutor {
    pool: rayon::ThreadPool,
}

impl RayonExecutor {
    /// `threads = None` uses rayon's default (one per core).
    pub fn new(threads: Option<usize>) -> Result<Self, rayon::ThreadPoolBuildError> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            b = b.num_threads(n);
        }
        Ok(RayonExecutor { pool: b.build()? })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for RayonExecutor {
    fn map<T: Send, F: Fn(usize) -> T + Sync + Send>(&self, n: usize, f: F) -> Vec<T> {
        self.pool.install(|| (0..n).into_par_iter().map(&f).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use bandlab_core::spectra::compute_bands;
    use bandlab_core::{Lattice, PowerLawSynth, Scheme, Serial};

    #[test]
    fn keeps_order() {
        let ex = RayonExecutor::new(Some(4)).unwrap();
        assert_eq!(ex.threads(), 4);
        let v = ex.map(1000, |i| i * i);
        assert!(v.iter().enumerate().all(|(i, x)| *x == i * i));
    }

    #[test]
    fn bands_independent_of_schedule() {
        let lat = Lattice::hexagonal(1.0).unwrap();
        let v = PowerLawSynth::new(1.5, 3, 2).build(&lat).unwrap();
        let ks = lat.uniform_grid(7).unwrap();
        let serial = compute_bands(&v, &ks, 60.0, &Scheme::KDependent, 3, &Serial).unwrap();
        for threads in [1, 3, 8] {
            let ex = RayonExecutor::new(Some(threads)).unwrap();
            let par = compute_bands(&v, &ks, 60.0, &Scheme::KDependent, 3, &ex).unwrap();
            assert_eq!(par, serial);
        }
    }
}
