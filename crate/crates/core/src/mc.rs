//! Monte Carlo estimates and the deterministic batch plan behind them.
//!
//! `samples` draws are cut into fixed-size batches; batch `b` draws from
//! `stream.split(b)`. Batches may run on any number of threads, and their
//! partial moments are merged pairwise in batch order, so the result depends
//! only on `(seed, path, samples)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::sampling::RandomStream;

/// Samples per batch in the parallel plan.
pub const BATCH_SIZE: usize = 4096;

/// Mean, standard error and provenance of a Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(samples)`.
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
}

impl McEstimate {
    /// Exact value with no sampling error.
    pub fn exact(value: f64, samples: u64, seed: u64) -> Self {
        Self {
            mean: value,
            stderr: 0.0,
            samples,
            seed,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            mean: self.mean * factor,
            stderr: self.stderr * factor.abs(),
            ..*self
        }
    }

    /// `sqrt(se_a² + se_b²)`.
    pub fn combined_stderr(&self, other: &Self) -> f64 {
        self.stderr.hypot(other.stderr)
    }

    /// `|mean - target| <= k · stderr`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr
    }

    /// `self` exceeds `other` by more than `k` combined standard errors.
    pub fn exceeds(&self, other: &Self, k: f64) -> bool {
        self.mean - other.mean > k * self.combined_stderr(other)
    }

    /// The two estimates agree within `k` combined standard errors.
    pub fn agrees(&self, other: &Self, k: f64) -> bool {
        (self.mean - other.mean).abs() <= k * self.combined_stderr(other)
    }
}

/// Running count, mean and centered second moment.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&self, other: &Self) -> Self {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let w = other.count as f64 / count as f64;
        Self {
            count,
            mean: self.mean + delta * w,
            m2: self.m2 + other.m2 + delta * delta * self.count as f64 * w,
        }
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    pub fn estimate(&self, seed: u64) -> McEstimate {
        let stderr = if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        };
        McEstimate {
            mean: self.mean,
            stderr,
            samples: self.count,
            seed,
        }
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::default();
        for x in iter {
            m.push(x);
        }
        m
    }
}

/// Merges in index order by pairwise halving, independent of thread count.
pub fn pairwise_merge<T: Clone>(items: &[T], merge: &impl Fn(&T, &T) -> T) -> Option<T> {
    match items.len() {
        0 => None,
        1 => Some(items[0].clone()),
        n => {
            let (left, right) = items.split_at(n / 2);
            let l = pairwise_merge(left, merge)?;
            let r = pairwise_merge(right, merge)?;
            Some(merge(&l, &r))
        }
    }
}

/// Runs `work(batch_stream, batch_len)` over the batch plan for `samples`
/// draws and returns the per-batch results in batch order.
pub fn run_batches<T, F>(samples: usize, stream: &RandomStream, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut RandomStream, usize) -> T + Sync + Send,
{
    let batches = samples.div_ceil(BATCH_SIZE);
    (0..batches)
        .into_par_iter()
        .map(|b| {
            let len = BATCH_SIZE.min(samples - b * BATCH_SIZE);
            let mut s = stream.split(b as u64);
            work(&mut s, len)
        })
        .collect()
}

/// Mean of `f` over `samples` independent draws.
pub fn estimate_mean<F>(samples: usize, stream: &RandomStream, f: F) -> McEstimate
where
    F: Fn(&mut RandomStream) -> f64 + Sync + Send,
{
    let parts = run_batches(samples, stream, |s, len| {
        (0..len).map(|_| f(s)).collect::<Moments>()
    });
    pairwise_merge(&parts, &|a: &Moments, b: &Moments| a.merge(b))
        .unwrap_or_default()
        .estimate(stream.seed())
}
