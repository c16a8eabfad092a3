//! Output densities of a code and the divergence estimators built on them.
//!
//! Three laws on `ℝⁿ` matter for covertness: the noise `P_Z = N(0, σ²)^⊗n`
//! seen when nothing is sent, the i.i.d. BPSK output `P_Y^⊗n` at the code's
//! symbol power, and the code's own output `P_C`, an equal-weight mixture of
//! `N(x_{w,k}, σ²)` over every (message, key) pair. Relative to the noise,
//! component `c` has log-likelihood ratio `(⟨x_c, y⟩ - ‖x_c‖²/2)/σ²`, so
//! every log ratio below is evaluated without ever forming the (large,
//! nearly cancelling) absolute log-densities.

use rand::Rng;

use crate::codebook::Codebook;
use crate::error::{domain, Error, Result};
use crate::mc::{EstimateWithError, McRun, Moments};
use crate::params::ChannelParams;
use crate::rng::{stream, Domain, GaussianNoise, NoiseSource};
use crate::special::{dot, integrate, ln_cosh, log_gaussian_block, log_sum_exp, DoubleDouble};

/// Largest mixture evaluated exactly by the estimators.
pub const MAX_MIXTURE_COMPONENTS: u64 = 1 << 20;

/// `ln p(y)` under the noise, the i.i.d. BPSK law and the code mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDensityTriple {
    pub log_noise: f64,
    pub log_iid_bpsk: f64,
    pub log_code_mixture: f64,
}

/// `Σᵢ ln N(yᵢ; 0, σ²)`.
pub fn log_noise_density(y: &[f64], channel: ChannelParams) -> f64 {
    let energy: f64 = y.iter().map(|v| v * v).sum();
    log_gaussian_block(y.len(), energy, channel.variance())
}

/// `ln p_Y^⊗n(y) - ln p_Z(y) = Σᵢ ln cosh(√P yᵢ/σ²) - nP/(2σ²)`.
pub fn log_iid_bpsk_ratio(y: &[f64], power: f64, channel: ChannelParams) -> f64 {
    let var = channel.variance();
    let scale = power.sqrt() / var;
    y.iter().map(|&v| ln_cosh(scale * v)).sum::<f64>() - y.len() as f64 * power / (2.0 * var)
}

/// `Σᵢ ln(½N(yᵢ; √P, σ²) + ½N(yᵢ; -√P, σ²))`.
pub fn log_iid_bpsk_density(y: &[f64], power: f64, channel: ChannelParams) -> f64 {
    log_noise_density(y, channel) + log_iid_bpsk_ratio(y, power, channel)
}

/// Per-component log ratios against the noise, written into `scores` in
/// key-major order; the zero codewords are folded into one extra entry
/// `ln(M₀ K)` when present.
fn component_scores(cb: &Codebook, channel: ChannelParams, y: &[f64], x: &mut [f64], scores: &mut Vec<f64>) {
    scores.clear();
    let n = cb.n();
    let var = channel.variance();
    let half_energy = 0.5 * n as f64 * cb.power();
    for k in 0..cb.num_keys() {
        if let Some(block) = cb.key_block(k) {
            scores.extend(block.chunks_exact(n).map(|c| (dot(c, y) - half_energy) / var));
        } else {
            for w in 0..cb.base_messages() {
                cb.codeword_into(w, k, x);
                scores.push((dot(x, y) - half_energy) / var);
            }
        }
    }
    let zeros = cb.zero_message_count() as u64 * cb.num_keys() as u64;
    if zeros > 0 {
        scores.push((zeros as f64).ln());
    }
}

/// `ln p_C(y) - ln p_Z(y)`.
fn log_mixture_ratio(cb: &Codebook, scores: &[f64]) -> f64 {
    log_sum_exp(scores) - (cb.components() as f64).ln()
}

fn check_length(cb: &Codebook, y: &[f64]) -> Result<()> {
    if y.len() != cb.n() {
        return Err(Error::LengthMismatch {
            expected: cb.n(),
            found: y.len(),
        });
    }
    Ok(())
}

pub fn log_densities(y: &[f64], cb: &Codebook, channel: ChannelParams) -> Result<LogDensityTriple> {
    check_length(cb, y)?;
    if let Some(bad) = y.iter().find(|v| !v.is_finite()) {
        return Err(domain("y", *bad, "finite"));
    }
    let log_noise = log_noise_density(y, channel);
    let mut scores = Vec::with_capacity(cb.components() as usize);
    let mut x = vec![0.0; cb.n()];
    component_scores(cb, channel, y, &mut x, &mut scores);
    Ok(LogDensityTriple {
        log_noise,
        log_iid_bpsk: log_noise + log_iid_bpsk_ratio(y, cb.power(), channel),
        log_code_mixture: log_noise + log_mixture_ratio(cb, &scores),
    })
}

/// Monte Carlo divergences sharing one set of channel outputs `Y ~ P_C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceEstimates {
    /// `D(P_C ‖ P_Z)`.
    pub code_vs_noise: EstimateWithError,
    /// `D(P_C ‖ P_Y^⊗n)`.
    pub code_vs_iid: EstimateWithError,
    /// `E_{P_C}[ln p_Y^⊗n / p_Z]`.
    pub iid_vs_noise: EstimateWithError,
    /// `I(X_C; Y_C)` with the input uniform over all (message, key) pairs.
    pub mutual_information: EstimateWithError,
}

#[derive(Default, Clone, Copy)]
struct DivergenceAcc {
    code_vs_noise: Moments,
    code_vs_iid: Moments,
    iid_vs_noise: Moments,
    mutual_information: Moments,
}

/// Estimates every divergence of the code in one pass.
///
/// Sample `s` draws a (message, key) pair uniformly, transmits it and
/// evaluates the log ratios at the output.
pub fn estimate_divergences(cb: &Codebook, channel: ChannelParams, run: &McRun) -> Result<DivergenceEstimates> {
    run.require("samples")?;
    if cb.components() > MAX_MIXTURE_COMPONENTS {
        return Err(Error::MixtureTooLarge {
            components: cb.components(),
            cap: MAX_MIXTURE_COMPONENTS,
        });
    }
    let n = cb.n();
    let keys = cb.num_keys();
    let components = cb.components();
    let sigma = channel.sigma();
    let var = channel.variance();
    let power = cb.power();
    let seed = run.seed;

    let partials = run.blocks(|range| {
        let mut acc = DivergenceAcc::default();
        let mut x = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut scores = Vec::with_capacity(components as usize);
        for s in range {
            let mut rng = stream(seed, Domain::DivergenceSample, 0, s);
            let c = rng.random_range(0..components);
            let (w, k) = ((c / keys as u64) as usize, (c % keys as u64) as usize);
            cb.codeword_into(w, k, &mut x);
            let mut noise = GaussianNoise::new(&mut rng);
            for (yi, &xi) in y.iter_mut().zip(&x) {
                *yi = xi + noise.sample(sigma);
            }
            component_scores(cb, channel, &y, &mut x, &mut scores);
            let mixture = log_mixture_ratio(cb, &scores);
            let iid = log_iid_bpsk_ratio(&y, power, channel);
            // component_scores may have reused `x`; recompute the sent codeword's score
            let sent = if cb.is_zero_message(w) {
                0.0
            } else {
                cb.codeword_into(w, k, &mut x);
                (dot(&x, &y) - 0.5 * n as f64 * power) / var
            };
            acc.code_vs_noise.push(mixture);
            acc.code_vs_iid.push(mixture - iid);
            acc.iid_vs_noise.push(iid);
            acc.mutual_information.push(sent - mixture);
        }
        acc
    });

    let mut total = DivergenceAcc::default();
    for p in &partials {
        total.code_vs_noise.merge(&p.code_vs_noise);
        total.code_vs_iid.merge(&p.code_vs_iid);
        total.iid_vs_noise.merge(&p.iid_vs_noise);
        total.mutual_information.merge(&p.mutual_information);
    }
    Ok(DivergenceEstimates {
        code_vs_noise: total.code_vs_noise.mean_estimate(),
        code_vs_iid: total.code_vs_iid.mean_estimate(),
        iid_vs_noise: total.iid_vs_noise.mean_estimate(),
        mutual_information: total.mutual_information.mean_estimate(),
    })
}

/// `D(P_C ‖ P_Z)` estimated as `E_{P_C}[ln p_C(Y) - ln p_Z(Y)]`.
pub fn estimate_kl_code_vs_noise(cb: &Codebook, channel: ChannelParams, run: &McRun) -> Result<EstimateWithError> {
    Ok(estimate_divergences(cb, channel, run)?.code_vs_noise)
}

/// `I(X_C; Y_C)` estimated as `E[ln p(Y|X) - ln p_C(Y)]`.
pub fn estimate_mutual_information(cb: &Codebook, channel: ChannelParams, run: &McRun) -> Result<EstimateWithError> {
    Ok(estimate_divergences(cb, channel, run)?.mutual_information)
}

/// `D(P_Y ‖ P_Z)` for one BPSK symbol of power `power`, by adaptive quadrature.
pub fn per_letter_kl_quadrature(power: f64, channel: ChannelParams) -> Result<f64> {
    if !(power >= 0.0 && power.is_finite()) {
        return Err(domain("power", power, "0 <= power < inf"));
    }
    if power == 0.0 {
        return Ok(0.0);
    }
    let sigma = channel.sigma();
    let var = channel.variance();
    let a = power.sqrt();
    let norm = 1.0 / (2.0 * std::f64::consts::PI * var).sqrt();
    let integrand = |y: f64| {
        let p_y = 0.5 * norm * ((-(y - a).powi(2) / (2.0 * var)).exp() + (-(y + a).powi(2) / (2.0 * var)).exp());
        p_y * (ln_cosh(a * y / var) - power / (2.0 * var))
    };
    let lo = -a - 12.0 * sigma;
    let hi = a + 12.0 * sigma;
    let cuts = [lo, -a, 0.0, a, hi];
    Ok(cuts.windows(2).map(|w| integrate(integrand, w[0], w[1], 1e-14)).sum())
}

/// Raw moments `E[Y²], E[Y⁴], E[Y⁶]` of `Y = X + Z`, `X = ±√P` equiprobable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureMoments {
    pub m2: f64,
    pub m4: f64,
    pub m6: f64,
}

pub fn mixture_moments(power: f64, channel: ChannelParams) -> Result<MixtureMoments> {
    if !(power >= 0.0) {
        return Err(domain("power", power, "power >= 0"));
    }
    let s2 = channel.variance();
    let (s4, s6) = (s2 * s2, s2 * s2 * s2);
    let p = power;
    Ok(MixtureMoments {
        m2: s2 + p,
        m4: 3.0 * s4 + 6.0 * s2 * p + p * p,
        m6: 15.0 * s6 + 45.0 * s4 * p + 15.0 * s2 * p * p + p * p * p,
    })
}

/// Upper bound on `n · E_{P_C}[ln p_Y^⊗n / p_Z]` for a BPSK code, from
/// `ln cosh x ≤ x²/2 - x⁴/12 + x⁶/45`, in two algebraically equal forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffsetBound {
    /// Moment form `n[m₂P/(2σ⁴) - m₄P²/(12σ⁸) + m₆P³/(45σ¹²)] - nP/(2σ²)`.
    pub raw_form: f64,
    /// Expanded form `n(P²/(4σ⁴) - P³/(6σ⁶) + 11P⁴/(12σ⁸) + P⁵/(3σ¹⁰) + P⁶/(45σ¹²))`.
    pub polynomial_form: f64,
}

/// Moment form in double-double: its leading `nP/(2σ²)` cancels, which would
/// leave only a few correct digits in plain doubles when `P ≪ σ²`.
fn raw_offset(n: u64, power: f64, sigma: f64) -> f64 {
    type D = DoubleDouble;
    let c = |x: f64| D::from_f64(x);
    let p = c(power);
    let s2 = c(sigma) * c(sigma);
    let s4 = s2 * s2;
    let s8 = s4 * s4;
    let s12 = s8 * s4;
    let p2 = p * p;
    let p3 = p2 * p;
    let m2 = s2 + p;
    let m4 = c(3.0) * s4 + c(6.0) * s2 * p + p2;
    let m6 = c(15.0) * s4 * s2 + c(45.0) * s4 * p + c(15.0) * s2 * p2 + p3;
    let per_symbol = m2 * p / (c(2.0) * s4) - m4 * p2 / (c(12.0) * s8) + m6 * p3 / (c(45.0) * s12) - p / (c(2.0) * s2);
    (c(n as f64) * per_symbol).to_f64()
}

pub fn covert_offset_bound(n: u64, power: f64, channel: ChannelParams) -> Result<OffsetBound> {
    if n == 0 {
        return Err(domain("n", 0.0, "n >= 1"));
    }
    if !(power >= 0.0 && power.is_finite()) {
        return Err(domain("power", power, "0 <= power < inf"));
    }
    let raw_form = raw_offset(n, power, channel.sigma());
    let nf = n as f64;
    let r = power / channel.variance();
    // Horner in r = P/σ²
    let polynomial_form = nf * r * r * (0.25 + r * (-1.0 / 6.0 + r * (11.0 / 12.0 + r * (1.0 / 3.0 + r / 45.0))));
    Ok(OffsetBound {
        raw_form,
        polynomial_form,
    })
}
