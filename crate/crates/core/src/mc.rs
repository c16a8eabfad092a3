//! Monte Carlo plumbing shared by the estimators.
//!
//! Work is cut into fixed blocks of consecutive sample indices. Each block is
//! evaluated sequentially and yields a partial result; partials are collected
//! in block order and folded on the calling thread. Since neither the block
//! boundaries nor the fold order depend on scheduling, parallel and
//! sequential runs agree bit for bit.

use crate::error::{Error, Result};
use crate::rng::Seed;

/// Samples per block.
pub const BLOCK: u64 = 256;

/// Point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateWithError {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
}

impl EstimateWithError {
    /// Bernoulli proportion `hits / samples` with binomial standard error.
    pub fn proportion(hits: u64, samples: u64) -> Self {
        let p = hits as f64 / samples as f64;
        Self {
            mean: p,
            std_error: (p * (1.0 - p) / samples as f64).sqrt(),
            samples,
        }
    }

    /// True when `value` lies within `k` standard errors of the mean.
    pub fn within(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_error
    }
}

/// Streaming central moments up to order four, mergeable in a fixed order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        let n1 = self.count as f64;
        self.count += 1;
        let n = self.count as f64;
        let delta = x - self.mean;
        let delta_n = delta / n;
        let delta_n2 = delta_n * delta_n;
        let term1 = delta * delta_n * n1;
        self.mean += delta_n;
        self.m4 += term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * self.m2 - 4.0 * delta_n * self.m3;
        self.m3 += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * self.m2;
        self.m2 += term1;
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let na = self.count as f64;
        let nb = other.count as f64;
        let n = na + nb;
        let delta = other.mean - self.mean;
        let d2 = delta * delta;
        let d3 = d2 * delta;
        let d4 = d2 * d2;
        let m4 = self.m4
            + other.m4
            + d4 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
            + 6.0 * d2 * (na * na * other.m2 + nb * nb * self.m2) / (n * n)
            + 4.0 * delta * (na * other.m3 - nb * self.m3) / n;
        let m3 =
            self.m3 + other.m3 + d3 * na * nb * (na - nb) / (n * n) + 3.0 * delta * (na * other.m2 - nb * self.m2) / n;
        self.m2 += other.m2 + d2 * na * nb / n;
        self.m3 = m3;
        self.m4 = m4;
        self.mean += delta * nb / n;
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero below two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Sample mean with standard error `s / √N`.
    pub fn mean_estimate(&self) -> EstimateWithError {
        EstimateWithError {
            mean: self.mean,
            std_error: (self.variance() / self.count as f64).sqrt(),
            samples: self.count,
        }
    }

    /// Sample variance with the large-sample standard error `√((μ₄ - s⁴)/N)`.
    pub fn variance_estimate(&self) -> EstimateWithError {
        let n = self.count as f64;
        let s2 = self.variance();
        let mu4 = self.m4 / n;
        EstimateWithError {
            mean: s2,
            std_error: ((mu4 - s2 * s2).max(0.0) / n).sqrt(),
            samples: self.count,
        }
    }
}

/// Where Monte Carlo blocks run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon pool; identical to `Sequential` when the `parallel` feature is off.
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

/// Sample count, seed and execution mode of one Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McRun {
    pub samples: u64,
    pub seed: Seed,
    pub execution: Execution,
}

impl McRun {
    pub fn new(samples: u64, seed: impl Into<Seed>) -> Self {
        Self {
            samples,
            seed: seed.into(),
            execution: Execution::default(),
        }
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub(crate) fn require(&self, what: &'static str) -> Result<()> {
        if self.samples == 0 {
            Err(Error::NoSamples(what))
        } else {
            Ok(())
        }
    }

    /// Evaluates `block(range)` over consecutive index ranges and returns the
    /// partials in index order.
    pub fn blocks<T, F>(&self, block: F) -> Vec<T>
    where
        T: Send,
        F: Fn(std::ops::Range<u64>) -> T + Sync + Send,
    {
        let total = self.samples;
        let count = total.div_ceil(BLOCK);
        let range = move |b: u64| b * BLOCK..((b + 1) * BLOCK).min(total);
        match self.execution {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..count).into_par_iter().map(|b| block(range(b))).collect()
            }
            _ => (0..count).map(|b| block(range(b))).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(xs: &[f64]) -> (f64, f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let c2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>();
        let c4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>();
        (m, c2 / (n - 1.0), c4 / n)
    }

    #[test]
    fn moments_match_two_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37 % 101) as f64).sin() * 3.0 + 1.0).collect();
        let mut whole = Moments::default();
        xs.iter().for_each(|&x| whole.push(x));
        let mut merged = Moments::default();
        for chunk in xs.chunks(77) {
            let mut part = Moments::default();
            chunk.iter().for_each(|&x| part.push(x));
            merged.merge(&part);
        }
        let (m, v, mu4) = naive(&xs);
        for acc in [whole, merged] {
            assert!((acc.mean() - m).abs() < 1e-12);
            assert!((acc.variance() - v).abs() < 1e-11);
            assert!((acc.m4 / acc.count as f64 - mu4).abs() < 1e-9);
        }
    }

    #[test]
    fn proportion_edges() {
        let e = EstimateWithError::proportion(0, 10);
        assert_eq!((e.mean, e.std_error), (0.0, 0.0));
        let e = EstimateWithError::proportion(5, 10);
        assert!((e.std_error - 0.5 / 10f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn block_ranges_cover_every_index() {
        let run = McRun::new(1000, 1);
        let parts = run.blocks(|r| (r.start, r.end));
        assert_eq!(parts.first().unwrap().0, 0);
        assert_eq!(parts.last().unwrap().1, 1000);
        assert!(parts.windows(2).all(|w| w[0].1 == w[1].0));
        let seq = run.with_execution(Execution::Sequential).blocks(|r| (r.start, r.end));
        assert_eq!(parts, seq);
    }
}
