//! Concentration of the information density of the BPSK construction.
//!
//! With `X = ±√P` and `Z ~ N(0, σ²)` the information density of one use is
//! bounded below by `U + P/σ² - P²/(2σ⁴)` where
//! `U = (1/σ² - P/σ⁴)·X·Z - P/(2σ⁴)·Z²`. Decoding fails only when
//! `Σ(Uᵢ - E[U])` drops below `-n^(1/3)`; this module supplies the moments
//! of `U`, the log-MGF of the scaled centered variable
//! `V = n^(1/4)(U - E[U])`, the moderate-deviations exponent of that tail,
//! and a Monte Carlo estimate of the tail itself.
//!
//! The moderate-deviations theorem assumes a fixed variance for `V`, whereas
//! here `Var[V] = √n·Var[U]` moves with `n` through `P`. The exponent is
//! still evaluated as if the theorem applied; read it as a heuristic at
//! finite `n`.

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::error::{domain, Error, Result};
use crate::mc::{EstimateWithError, McRun, Moments};
use crate::params::{epsilon_prime, ChannelParams, CovertBudget};
use crate::rng::{stream, Domain, NoiseKind};

/// Mean and variance of one summand `U`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UStatistics {
    pub mean: f64,
    pub variance: f64,
}

fn check_power(power: f64) -> Result<()> {
    if !(power > 0.0 && power.is_finite()) {
        return Err(domain("power", power, "0 < power < inf"));
    }
    Ok(())
}

/// `E[U] = -P/(2σ²)`, `Var[U] = P/σ² - 3P²/(2σ⁴) + P³/σ⁶`.
pub fn u_statistics(power: f64, channel: ChannelParams) -> Result<UStatistics> {
    check_power(power)?;
    let r = power / channel.variance();
    Ok(UStatistics {
        mean: -r / 2.0,
        variance: r - 1.5 * r * r + r * r * r,
    })
}

/// Coefficients of `U = a·X·Z - b·Z²`.
#[derive(Debug, Clone, Copy)]
struct USummand {
    a: f64,
    b: f64,
    amplitude: f64,
}

impl USummand {
    fn new(power: f64, channel: ChannelParams) -> Self {
        let var = channel.variance();
        Self {
            a: 1.0 / var - power / (var * var),
            b: power / (2.0 * var * var),
            amplitude: power.sqrt(),
        }
    }

    #[inline]
    fn eval(&self, x: f64, z: f64) -> f64 {
        self.a * x * z - self.b * z * z
    }
}

/// `ln E[exp(λ n^(1/4) (U - E[U]))]`, finite only where `1 + n^(1/4)Pλ/σ² > 0`.
pub fn u_log_mgf(lambda: f64, n: u64, power: f64, channel: ChannelParams) -> Result<f64> {
    check_power(power)?;
    if n == 0 {
        return Err(domain("n", 0.0, "n >= 1"));
    }
    let var = channel.variance();
    let r = power / var;
    let quarter = (n as f64).sqrt().sqrt();
    let t = lambda * quarter;
    let denom = 1.0 + t * r;
    if !(denom > 0.0) {
        return Err(Error::InfiniteMgf { lambda });
    }
    // (λ n^(1/4))² · (P/(2σ²) - P²/σ⁴ + P³/(2σ⁶))
    let quadratic = t * t * (r / 2.0 - r * r + r * r * r / 2.0);
    Ok(t * r / 2.0 + quadratic / denom - 0.5 * (t * r).ln_1p())
}

/// Radius of the ball around 0 on which `u_log_mgf` is finite with margin:
/// `σ²/(2 n^(1/4) P)`.
pub fn mgf_safe_radius(n: u64, power: f64, channel: ChannelParams) -> f64 {
    channel.variance() / (2.0 * (n as f64).sqrt().sqrt() * power)
}

/// `-√(1-ε) n^(1/6) / (4 √(1-ε′) √δ)`: exponent of the bound on
/// `P[Σ(Uᵢ - E[U]) < -n^(1/3)]` at the construction's power.
pub fn moderate_deviation_tail_exponent(n: u64, budget: CovertBudget) -> Result<f64> {
    if n < 2 {
        return Err(domain("n", n as f64, "n >= 2"));
    }
    let eps_p = epsilon_prime(n);
    if budget.epsilon() <= eps_p {
        return Err(Error::NotInRegime {
            n,
            epsilon: budget.epsilon(),
            epsilon_prime: eps_p,
        });
    }
    let sixth = (n as f64).cbrt().sqrt();
    Ok(-(1.0 - budget.epsilon()).sqrt() * sixth / (4.0 * (1.0 - eps_p).sqrt() * budget.delta().sqrt()))
}

/// Generic moderate-deviations exponent `-1/(2 Var[V] aₙ)` with `aₙ = n^(-1/6)`
/// and `Var[V] = √n Var[U]`.
pub fn generic_tail_exponent(n: u64, power: f64, channel: ChannelParams) -> Result<f64> {
    let stats = u_statistics(power, channel)?;
    let nf = n as f64;
    let var_v = nf.sqrt() * stats.variance;
    Ok(-nf.cbrt().sqrt() / (2.0 * var_v))
}

/// `min(1, E/t)`.
pub fn markov_probability_bound(expectation: f64, threshold: f64) -> Result<f64> {
    if !(threshold > 0.0) {
        return Err(domain("threshold", threshold, "threshold > 0"));
    }
    if !(expectation >= 0.0) {
        return Err(domain("expectation", expectation, "expectation >= 0"));
    }
    Ok((expectation / threshold).min(1.0))
}

/// Empirical `P[Σᵢ(Uᵢ - E[U]) ≤ -n^(1/3)]` over `run.samples` independent sums.
pub fn empirical_tail_probability(
    n: u64,
    power: f64,
    channel: ChannelParams,
    run: &McRun,
) -> Result<EstimateWithError> {
    empirical_tail_probability_with(n, power, channel, run, NoiseKind::Gaussian)
}

pub fn empirical_tail_probability_with(
    n: u64,
    power: f64,
    channel: ChannelParams,
    run: &McRun,
    noise: NoiseKind,
) -> Result<EstimateWithError> {
    Ok(tail_events(n, power, channel, run, noise)?.lower_tail)
}

/// Tail events of the centered sum `S = Σ(Uᵢ - E[U])` over shared trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEvents {
    /// `P[S ≤ -n^(1/3)]`.
    pub lower_tail: EstimateWithError,
    /// `P[S² ≥ n^(2/3)]`, which contains the lower tail.
    pub two_sided: EstimateWithError,
    /// Mean of `S²`, whose exact value is `n Var[U]`.
    pub second_moment: EstimateWithError,
}

pub fn tail_events(n: u64, power: f64, channel: ChannelParams, run: &McRun, noise: NoiseKind) -> Result<TailEvents> {
    check_power(power)?;
    run.require("trials")?;
    if n == 0 {
        return Err(domain("n", 0.0, "n >= 1"));
    }
    let summand = USummand::new(power, channel);
    let sigma = channel.sigma();
    let shift = power / (2.0 * channel.variance());
    let threshold = (n as f64).cbrt();
    let seed = run.seed;

    let partials = run.blocks(|range| {
        let (mut lower, mut two_sided) = (0u64, 0u64);
        let mut square = Moments::default();
        for t in range {
            let mut rng = stream(seed, Domain::TailTrial, 0, t);
            let mut sum = 0.0;
            let mut remaining = n;
            while remaining > 0 {
                let bits = rng.next_u64();
                let take = remaining.min(64);
                for i in 0..take {
                    let x = if (bits >> i) & 1 == 1 {
                        summand.amplitude
                    } else {
                        -summand.amplitude
                    };
                    let z = match noise {
                        NoiseKind::Gaussian => sigma * rng.sample::<f64, _>(StandardNormal),
                        NoiseKind::Zero => 0.0,
                    };
                    sum += summand.eval(x, z) + shift;
                }
                remaining -= take;
            }
            if sum <= -threshold {
                lower += 1;
            }
            if sum * sum >= threshold * threshold {
                two_sided += 1;
            }
            square.push(sum * sum);
        }
        (lower, two_sided, square)
    });

    let (mut lower, mut two_sided) = (0u64, 0u64);
    let mut square = Moments::default();
    for (l, t, s) in &partials {
        lower += l;
        two_sided += t;
        square.merge(s);
    }
    Ok(TailEvents {
        lower_tail: EstimateWithError::proportion(lower, run.samples),
        two_sided: EstimateWithError::proportion(two_sided, run.samples),
        second_moment: square.mean_estimate(),
    })
}

/// Sample moments of `U` drawn with the sign of `X` fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct USampleMoments {
    pub mean: EstimateWithError,
    pub variance: EstimateWithError,
}

/// Draws `U′ = (1/σ² - P/σ⁴)√P·Z - P/(2σ⁴)·Z²` (`positive = true`) or its
/// mirror `U″` with `-√P` and estimates its mean and variance.
pub fn sample_u_moments(power: f64, channel: ChannelParams, run: &McRun, positive: bool) -> Result<USampleMoments> {
    check_power(power)?;
    run.require("samples")?;
    let acc = fold_u_samples(
        power,
        channel,
        run,
        positive,
        Moments::default(),
        |m, u| m.push(u),
        |a, b| a.merge(b),
    );
    Ok(USampleMoments {
        mean: acc.mean_estimate(),
        variance: acc.variance_estimate(),
    })
}

/// The raw `U′` (or `U″`) samples, in sample order.
pub fn u_samples(power: f64, channel: ChannelParams, run: &McRun, positive: bool) -> Result<Vec<f64>> {
    check_power(power)?;
    run.require("samples")?;
    Ok(fold_u_samples(
        power,
        channel,
        run,
        positive,
        Vec::new(),
        |v: &mut Vec<f64>, u| v.push(u),
        |a, b| a.extend_from_slice(b),
    ))
}

fn fold_u_samples<T, P, M>(
    power: f64,
    channel: ChannelParams,
    run: &McRun,
    positive: bool,
    init: T,
    push: P,
    merge: M,
) -> T
where
    T: Clone + Send + Sync,
    P: Fn(&mut T, f64) + Sync + Send,
    M: Fn(&mut T, &T),
{
    let summand = USummand::new(power, channel);
    let x = if positive {
        summand.amplitude
    } else {
        -summand.amplitude
    };
    let sigma = channel.sigma();
    let family = u64::from(positive);
    let seed = run.seed;
    let partials = run.blocks(|range| {
        let mut acc = init.clone();
        let mut rng = stream(seed, Domain::StatisticSample, family, range.start / crate::mc::BLOCK);
        for _ in range {
            let z = sigma * rng.sample::<f64, _>(StandardNormal);
            push(&mut acc, summand.eval(x, z));
        }
        acc
    });
    let mut total = init;
    for p in &partials {
        merge(&mut total, p);
    }
    total
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F₁ - F₂|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut sup: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        sup = sup.max((i as f64 / na - j as f64 / nb).abs());
    }
    sup
}

/// Critical value of the two-sample KS statistic at level 0.01.
pub fn ks_critical_99(na: usize, nb: usize) -> f64 {
    let (na, nb) = (na as f64, nb as f64);
    1.627_624 * ((na + nb) / (na * nb)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> ChannelParams {
        ChannelParams::new(1.0).unwrap()
    }

    #[test]
    fn closed_form_statistics() {
        let s = u_statistics(0.01, unit()).unwrap();
        assert!((s.mean + 0.005).abs() < 1e-18);
        assert!((s.variance - (0.01 - 1.5e-4 + 1e-6)).abs() < 1e-17);
        let s = u_statistics(1e-6, unit()).unwrap();
        assert!((s.variance / 1e-6 - 1.0).abs() < 2e-6);
        assert!(u_statistics(0.0, unit()).is_err());
    }

    #[test]
    fn log_mgf_matches_direct_integration() {
        // mpmath: ln ∫ φ_σ(z) exp(λ n^(1/4)(U(z) - E U)) dz
        let frozen = [
            (0.5, 1024, 0.02, 1.0, 0.073_489_479_491_062_493_986),
            (-0.3, 4096, 0.0038, 1.0, 0.010_981_868_368_500_571_229),
            (1.0, 100, 0.1, 1.5, 0.182_423_831_914_072_358_89),
        ];
        for (lambda, n, p, sigma, expected) in frozen {
            let v = u_log_mgf(lambda, n, p, ChannelParams::new(sigma).unwrap()).unwrap();
            assert!((v - expected).abs() < 1e-13, "{v} vs {expected}");
        }
    }

    #[test]
    fn log_mgf_cumulants() {
        let (n, p) = (4096u64, 0.0038);
        let h = 1e-6;
        assert_eq!(u_log_mgf(0.0, n, p, unit()).unwrap(), 0.0);
        let f = |l: f64| u_log_mgf(l, n, p, unit()).unwrap();
        let first = (f(h) - f(-h)) / (2.0 * h);
        assert!(first.abs() < 1e-8, "{first}");
        let h = 1e-4;
        let second = (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
        let expected = (n as f64).sqrt() * u_statistics(p, unit()).unwrap().variance;
        assert!((second / expected - 1.0).abs() < 1e-4, "{second} vs {expected}");
    }

    #[test]
    fn log_mgf_domain() {
        let (n, p) = (256u64, 0.5);
        let edge = -1.0 / ((n as f64).sqrt().sqrt() * p);
        assert!(matches!(u_log_mgf(edge, n, p, unit()), Err(Error::InfiniteMgf { .. })));
        assert!(u_log_mgf(edge * 1.01, n, p, unit()).is_err());
        let r = mgf_safe_radius(n, p, unit());
        for i in -10..=10 {
            let l = r * i as f64 / 10.0;
            assert!(u_log_mgf(l, n, p, unit()).unwrap().is_finite());
        }
    }

    #[test]
    fn exponent_values() {
        let b = CovertBudget::new(0.5, 0.01).unwrap();
        let e6 = moderate_deviation_tail_exponent(1_000_000, b).unwrap();
        // mpmath: -18.63389981249824747
        assert!((e6 + 18.633_899_812_498_247_47).abs() < 1e-12);
        let e4 = moderate_deviation_tail_exponent(10_000, b).unwrap();
        assert!(e6 < e4 && e4 < 0.0);
        assert!(moderate_deviation_tail_exponent(1_000_000, CovertBudget::new(0.1, 0.01).unwrap()).is_err());
    }

    #[test]
    fn exponent_matches_generic_form() {
        let b = CovertBudget::new(0.5, 0.01).unwrap();
        for n in [1_000_000u64, 10_000_000] {
            let s = crate::params::scaling_parameters(n, b, unit()).unwrap();
            let generic = generic_tail_exponent(n, s.power, unit()).unwrap();
            let specific = moderate_deviation_tail_exponent(n, b).unwrap();
            assert!((generic / specific - 1.0).abs() < 0.01, "{generic} vs {specific}");
        }
    }

    #[test]
    fn markov_values() {
        assert_eq!(markov_probability_bound(0.0, 2.0).unwrap(), 0.0);
        assert_eq!(markov_probability_bound(2.0, 2.0).unwrap(), 1.0);
        assert_eq!(markov_probability_bound(0.3, 0.6).unwrap(), 0.5);
        assert!(markov_probability_bound(0.3, 0.0).is_err());
        assert!(markov_probability_bound(-0.3, 1.0).is_err());
    }

    #[test]
    fn noiseless_tail_never_fires() {
        let e = empirical_tail_probability_with(64, 0.1, unit(), &McRun::new(100, 0), NoiseKind::Zero).unwrap();
        assert_eq!(e.mean, 0.0);
        assert!(empirical_tail_probability(64, 0.1, unit(), &McRun::new(0, 0)).is_err());
    }

    #[test]
    fn second_moment_of_sum() {
        let (n, p) = (128u64, 0.05);
        let ev = tail_events(n, p, unit(), &McRun::new(20_000, 4), NoiseKind::Gaussian).unwrap();
        let exact = n as f64 * u_statistics(p, unit()).unwrap().variance;
        assert!(ev.second_moment.within(exact, 4.0), "{:?} vs {exact}", ev.second_moment);
        assert!(ev.two_sided.mean >= ev.lower_tail.mean);
    }

    #[test]
    fn ks_basics() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(ks_statistic(&a, &a), 0.0);
        assert_eq!(ks_statistic(&a, &[10.0, 11.0, 12.0]), 1.0);
        assert!((ks_critical_99(100, 100) - 0.2302).abs() < 1e-3);
    }
}
