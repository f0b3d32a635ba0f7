//! Seeded, splittable random streams and order-stable parallel reductions.
//!
//! Work is cut into fixed-size chunks. Chunk `i` always draws from ChaCha
//! stream `i` of a sub-seed taken from the caller's generator, and chunk
//! results are reduced in chunk order. Monte Carlo output therefore depends
//! on the seed only, never on the number of worker threads.

use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// The generator used throughout the crate.
pub type Rng = ChaCha8Rng;

/// Samples per parallel work item.
pub const CHUNK: usize = 8192;

/// Generator seeded from a 64-bit master seed.
pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` of the generator family keyed by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw on `[0, 1)`.
#[inline]
pub fn uniform(rng: &mut Rng) -> f64 {
    rng.random::<f64>()
}

/// Runs `work(rng, count)` over `n` samples split into chunks and returns the
/// per-chunk results in chunk order.
pub fn par_chunks<T, F>(n: usize, rng: &mut Rng, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut Rng, usize) -> T + Sync,
{
    let seed = rng.next_u64();
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|i| {
            let count = CHUNK.min(n - i * CHUNK);
            let mut local = stream_rng(seed, i as u64);
            work(&mut local, count)
        })
        .collect()
}

/// Running first and second moments of a scalar sample.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanAcc {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl MeanAcc {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &MeanAcc) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum / self.n as f64
        }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        let m = self.sum / n;
        ((self.sum_sq - n * m * m) / (n - 1.0)).max(0.0)
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

/// Joint moments of a paired sample `(x, y)`, for ratio estimators `E x / E y`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PairAcc {
    pub n: u64,
    pub sx: f64,
    pub sy: f64,
    pub sxx: f64,
    pub syy: f64,
    pub sxy: f64,
}

impl PairAcc {
    #[inline]
    pub fn push(&mut self, x: f64, y: f64) {
        self.n += 1;
        self.sx += x;
        self.sy += y;
        self.sxx += x * x;
        self.syy += y * y;
        self.sxy += x * y;
    }

    pub fn merge(&mut self, o: &PairAcc) {
        self.n += o.n;
        self.sx += o.sx;
        self.sy += o.sy;
        self.sxx += o.sxx;
        self.syy += o.syy;
        self.sxy += o.sxy;
    }

    pub fn mean_x(&self) -> f64 {
        self.sx / self.n.max(1) as f64
    }

    pub fn mean_y(&self) -> f64 {
        self.sy / self.n.max(1) as f64
    }

    /// Standard error of the mean of `y`.
    pub fn stderr_y(&self) -> f64 {
        let acc = MeanAcc {
            n: self.n,
            sum: self.sy,
            sum_sq: self.syy,
        };
        acc.stderr()
    }

    /// Ratio `mean(x) / mean(y)` with its delta-method standard error.
    pub fn ratio(&self) -> (f64, f64) {
        if self.n < 2 {
            return (self.mean_x() / self.mean_y(), 0.0);
        }
        let n = self.n as f64;
        let mx = self.sx / n;
        let my = self.sy / n;
        let vx = ((self.sxx - n * mx * mx) / (n - 1.0)).max(0.0);
        let vy = ((self.syy - n * my * my) / (n - 1.0)).max(0.0);
        let cxy = (self.sxy - n * mx * my) / (n - 1.0);
        let r = mx / my;
        let var = (vx - 2.0 * r * cxy + r * r * vy) / (my * my * n);
        (r, var.max(0.0).sqrt())
    }
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub n: u64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate {
            value,
            stderr: 0.0,
            n: 0,
        }
    }

    pub fn from_acc(acc: &MeanAcc) -> Self {
        Estimate {
            value: acc.mean(),
            stderr: acc.stderr(),
            n: acc.n,
        }
    }

    pub fn from_ratio(acc: &PairAcc) -> Self {
        let (value, stderr) = acc.ratio();
        Estimate {
            value,
            stderr,
            n: acc.n,
        }
    }
}

/// Reduces per-chunk accumulators in order.
pub fn merge_means(parts: &[MeanAcc]) -> MeanAcc {
    let mut acc = MeanAcc::default();
    for p in parts {
        acc.merge(p);
    }
    acc
}

pub fn merge_pairs(parts: &[PairAcc]) -> PairAcc {
    let mut acc = PairAcc::default();
    for p in parts {
        acc.merge(p);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunked_results_do_not_depend_on_thread_count() {
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                let mut rng = rng_from_seed(7);
                let parts = par_chunks(50_000, &mut rng, |r, k| {
                    let mut acc = MeanAcc::default();
                    for _ in 0..k {
                        acc.push(uniform(r));
                    }
                    acc
                });
                merge_means(&parts)
            })
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.sum.to_bits(), b.sum.to_bits());
        assert_eq!(a.n, 50_000);
    }

    #[test]
    fn ratio_of_proportional_samples_has_zero_error() {
        let mut acc = PairAcc::default();
        for i in 1..100 {
            let y = i as f64;
            acc.push(0.5 * y, y);
        }
        let (r, se) = acc.ratio();
        assert!((r - 0.5).abs() < 1e-14);
        assert!(se < 1e-9);
    }
}
