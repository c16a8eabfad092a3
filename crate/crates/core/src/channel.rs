//! AWGN transmission, decoders and the average error probability estimator.

use rand::Rng;

use crate::codebook::Codebook;
use crate::error::{domain, Error, Result};
use crate::mc::{EstimateWithError, McRun};
use crate::params::ChannelParams;
use crate::rng::{stream, Domain, GaussianNoise, NoiseSource};
use crate::special::{dot, ln_cosh};

/// `y = x + z` with one noise draw per symbol.
pub fn transmit_block<N: NoiseSource + ?Sized>(x: &[f64], channel: ChannelParams, noise: &mut N) -> Vec<f64> {
    let sigma = channel.sigma();
    x.iter().map(|&xi| xi + noise.sample(sigma)).collect()
}

fn transmit_into<N: NoiseSource>(x: &[f64], sigma: f64, noise: &mut N, y: &mut [f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = xi + noise.sample(sigma);
    }
}

/// `Σᵢ ln cosh(√P yᵢ / σ²)`: the part of the information density that does
/// not depend on the codeword.
fn density_offset(y: &[f64], power: f64, channel: ChannelParams) -> f64 {
    let scale = power.sqrt() / channel.variance();
    y.iter().map(|&v| ln_cosh(scale * v)).sum()
}

/// Information density `ln p(y|x) / p_Y(y)` against the i.i.d. BPSK output law at `power`:
/// `Σᵢ xᵢyᵢ/σ² - ln cosh(√P yᵢ/σ²) + (P - xᵢ²)/(2σ²)`.
pub fn information_density(x: &[f64], y: &[f64], power: f64, channel: ChannelParams) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    if !(power > 0.0 && power.is_finite()) {
        return Err(domain("power", power, "0 < power < inf"));
    }
    let var = channel.variance();
    let energy = dot(x, x);
    Ok(dot(x, y) / var - density_offset(y, power, channel) + (x.len() as f64 * power - energy) / (2.0 * var))
}

/// Result of decoding one received block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecodeOutcome {
    /// Decoded message, `None` when nothing was accepted or the best score tied.
    pub message: Option<usize>,
    pub tie: bool,
}

impl DecodeOutcome {
    fn decoded(w: usize) -> Self {
        Self {
            message: Some(w),
            tie: false,
        }
    }

    fn erased(tie: bool) -> Self {
        Self { message: None, tie }
    }
}

/// Decoder used by [`estimate_error_probability`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decoder {
    /// Nearest BPSK codeword.
    MaximumLikelihood,
    /// First BPSK codeword whose information density exceeds the threshold (nats).
    Threshold(f64),
}

fn check_key(cb: &Codebook, key: usize, y: &[f64]) -> Result<()> {
    if key >= cb.num_keys() {
        return Err(Error::KeyOutOfRange {
            key,
            keys: cb.num_keys(),
        });
    }
    if y.len() != cb.n() {
        return Err(Error::LengthMismatch {
            expected: cb.n(),
            found: y.len(),
        });
    }
    Ok(())
}

/// Calls `visit(w, ⟨x_w, y⟩)` for every BPSK message in order until it returns false.
fn for_each_correlation(cb: &Codebook, key: usize, y: &[f64], mut visit: impl FnMut(usize, f64) -> bool) {
    let n = cb.n();
    if let Some(block) = cb.key_block(key) {
        for (w, x) in block.chunks_exact(n).enumerate() {
            if !visit(w, dot(x, y)) {
                return;
            }
        }
    } else {
        let mut x = vec![0.0; n];
        for w in 0..cb.base_messages() {
            cb.codeword_into(w, key, &mut x);
            if !visit(w, dot(&x, y)) {
                return;
            }
        }
    }
}

fn ml_decode_unchecked(cb: &Codebook, key: usize, y: &[f64]) -> DecodeOutcome {
    // Every BPSK codeword has energy n·P, so the nearest one has the largest correlation.
    let mut best = f64::NEG_INFINITY;
    let mut best_w = 0;
    let mut tie = false;
    for_each_correlation(cb, key, y, |w, c| {
        if c > best {
            best = c;
            best_w = w;
            tie = false;
        } else if c == best {
            tie = true;
        }
        true
    });
    if tie {
        DecodeOutcome::erased(true)
    } else {
        DecodeOutcome::decoded(best_w)
    }
}

/// Minimum-distance decoding over the BPSK messages of `key`.
///
/// Zero-augmented messages are never returned; an exact tie yields `None`
/// with the tie flag set.
pub fn ml_decode(cb: &Codebook, key: usize, y: &[f64]) -> Result<DecodeOutcome> {
    check_key(cb, key, y)?;
    Ok(ml_decode_unchecked(cb, key, y))
}

fn threshold_decode_unchecked(
    cb: &Codebook,
    key: usize,
    y: &[f64],
    threshold: f64,
    channel: ChannelParams,
) -> DecodeOutcome {
    let var = channel.variance();
    let offset = density_offset(y, cb.power(), channel);
    let mut found = None;
    for_each_correlation(cb, key, y, |w, c| {
        if c / var - offset > threshold {
            found = Some(w);
            false
        } else {
            true
        }
    });
    match found {
        Some(w) => DecodeOutcome::decoded(w),
        None => DecodeOutcome::erased(false),
    }
}

/// Lowest-index BPSK message whose information density exceeds `threshold`.
pub fn threshold_decode(
    cb: &Codebook,
    key: usize,
    y: &[f64],
    threshold: f64,
    channel: ChannelParams,
) -> Result<DecodeOutcome> {
    check_key(cb, key, y)?;
    if threshold.is_nan() {
        return Err(domain("threshold", threshold, "not NaN"));
    }
    if !(cb.power() > 0.0) {
        return Err(domain("power", cb.power(), "power > 0"));
    }
    Ok(threshold_decode_unchecked(cb, key, y, threshold, channel))
}

/// Empirical average error probability, overall and per key.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorEstimate {
    /// Uniform average of the per-key estimates.
    pub overall: EstimateWithError,
    pub per_key: Vec<EstimateWithError>,
}

/// Monte Carlo estimate of the average error probability.
///
/// Trial `t` uses key `t mod K` and a uniformly drawn message, so every key
/// receives the same share of trials (±1) and the overall estimate is the
/// uniform average of the per-key ones. A zero-augmented message, a wrong
/// decision, an erasure or a tie all count as an error.
pub fn estimate_error_probability(
    cb: &Codebook,
    channel: ChannelParams,
    run: &McRun,
    decoder: Decoder,
) -> Result<ErrorEstimate> {
    run.require("trials")?;
    let keys = cb.num_keys();
    if run.samples < keys as u64 {
        return Err(domain("trials", run.samples as f64, "trials >= number of keys"));
    }
    if let Decoder::Threshold(t) = decoder {
        if t.is_nan() {
            return Err(domain("threshold", t, "not NaN"));
        }
        if !(cb.power() > 0.0) {
            return Err(domain("power", cb.power(), "power > 0"));
        }
    }
    let n = cb.n();
    let total = cb.num_messages() as u64;
    let sigma = channel.sigma();
    let seed = run.seed;

    let partials = run.blocks(|range| {
        let mut errors = vec![0u64; keys];
        let mut x = vec![0.0; n];
        let mut y = vec![0.0; n];
        for t in range {
            let k = (t % keys as u64) as usize;
            let mut rng = stream(seed, Domain::ErrorTrial, 0, t);
            let w = rng.random_range(0..total) as usize;
            if cb.is_zero_message(w) {
                errors[k] += 1;
                continue;
            }
            cb.codeword_into(w, k, &mut x);
            let mut noise = GaussianNoise::new(&mut rng);
            transmit_into(&x, sigma, &mut noise, &mut y);
            let outcome = match decoder {
                Decoder::MaximumLikelihood => ml_decode_unchecked(cb, k, &y),
                Decoder::Threshold(th) => threshold_decode_unchecked(cb, k, &y, th, channel),
            };
            if outcome.message != Some(w) {
                errors[k] += 1;
            }
        }
        errors
    });

    let mut errors = vec![0u64; keys];
    for part in &partials {
        for (acc, e) in errors.iter_mut().zip(part) {
            *acc += e;
        }
    }
    let per_key: Vec<EstimateWithError> = errors
        .iter()
        .enumerate()
        .map(|(k, &e)| {
            let trials = run.samples / keys as u64 + u64::from((k as u64) < run.samples % keys as u64);
            EstimateWithError::proportion(e, trials)
        })
        .collect();
    let kf = keys as f64;
    let overall = EstimateWithError {
        mean: per_key.iter().map(|e| e.mean).sum::<f64>() / kf,
        std_error: per_key.iter().map(|e| e.std_error * e.std_error).sum::<f64>().sqrt() / kf,
        samples: run.samples,
    };
    Ok(ErrorEstimate { overall, per_key })
}
