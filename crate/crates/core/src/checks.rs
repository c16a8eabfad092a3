//! Invariant suite run by `covert validate`.
//!
//! Each check is deterministic given the seed. Statistical checks use a
//! 3 (or 4) standard-error allowance; exact identities use tolerances a few
//! ulps above what the arithmetic can reach.

use crate::channel::{estimate_error_probability, ml_decode, threshold_decode, Decoder};
use crate::codebook::{build_lemma_code, generate_bpsk_codebook, Codebook, LemmaOptions};
use crate::covertness::{covert_offset_bound, estimate_divergences, log_densities, per_letter_kl_quadrature};
use crate::deviation::{
    ks_critical_99, ks_statistic, markov_probability_bound, mgf_safe_radius, tail_events, u_log_mgf, u_samples,
    u_statistics,
};
use crate::error::Result;
use crate::mc::{Execution, McRun};
use crate::params::{asymptotic_bounds, gaussian_capacity_bound, ChannelParams, CovertBudget, ScalingParams};
use crate::rng::{stream, Domain, GaussianNoise, NoiseKind, NoiseSource, Seed};
use crate::special::ln_cosh;

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Tighten the cumulant tolerance to zero so that check fails; exercises
    /// the failure path of the harness.
    pub corrupt_tolerance: bool,
}

type CheckFn = fn(&Ctx) -> Result<(bool, String)>;

struct Ctx {
    seed: u64,
    cumulant_tolerance: f64,
}

impl Ctx {
    fn run(&self, family: u64, samples: u64) -> McRun {
        McRun::new(samples, self.seed.wrapping_add(family.wrapping_mul(0x9e37_79b9)))
    }
}

const CHECKS: &[(&str, CheckFn)] = &[
    ("bounds_ordering", bounds_ordering),
    ("bounds_monotone", bounds_monotone),
    ("scaling_consistency", scaling_consistency),
    ("capacity_below_linear", capacity_below_linear),
    ("capacity_square_root_offset", capacity_square_root_offset),
    ("zero_augmentation_ratio", zero_augmentation_ratio),
    ("power_identity", power_identity),
    ("codebook_determinism", codebook_determinism),
    ("augmentation_preserves_base", augmentation_preserves_base),
    ("decoder_sign_symmetry", decoder_sign_symmetry),
    ("threshold_monotonicity", threshold_monotonicity),
    ("error_average_over_keys", error_average_over_keys),
    ("error_schedule_independence", error_schedule_independence),
    ("fano_chain", fano_chain),
    ("kl_decomposition", kl_decomposition),
    ("ln_cosh_inequalities", ln_cosh_inequalities),
    ("offset_bound_dominance", offset_bound_dominance),
    ("divergence_nonnegativity", divergence_nonnegativity),
    ("log_density_stability", log_density_stability),
    ("u_sign_symmetry", u_sign_symmetry),
    ("cumulant_consistency", cumulant_consistency),
    ("markov_dominates_empirical", markov_dominates_empirical),
    ("mgf_finite_near_origin", mgf_finite_near_origin),
];

/// Names of every check, in execution order.
pub fn check_names() -> impl Iterator<Item = &'static str> {
    CHECKS.iter().map(|(name, _)| *name)
}

pub fn run_suite(options: SuiteOptions) -> Vec<Check> {
    let ctx = Ctx {
        seed: options.seed,
        cumulant_tolerance: if options.corrupt_tolerance { 0.0 } else { 1e-4 },
    };
    CHECKS
        .iter()
        .map(|(name, f)| {
            let (passed, detail) = match f(&ctx) {
                Ok(r) => r,
                Err(e) => (false, format!("error: {e}")),
            };
            Check { name, passed, detail }
        })
        .collect()
}

fn unit() -> ChannelParams {
    ChannelParams::new(1.0).expect("unit noise")
}

fn grid(lo: f64, hi: f64, steps: usize) -> impl Iterator<Item = f64> {
    (0..=steps).map(move |i| lo + (hi - lo) * i as f64 / steps as f64)
}

fn bounds_ordering(_: &Ctx) -> Result<(bool, String)> {
    let mut worst = f64::INFINITY;
    for eps in grid(0.001, 0.999, 200) {
        for delta in grid(0.001, 1.0, 50) {
            let b = asymptotic_bounds(CovertBudget::new(eps, delta)?);
            worst = worst.min((b.lower - delta.sqrt()).min(b.upper - b.lower));
        }
    }
    Ok((worst >= 0.0, format!("min gap {worst:e}")))
}

fn bounds_monotone(_: &Ctx) -> Result<(bool, String)> {
    let eps: Vec<f64> = grid(0.01, 0.99, 98).collect();
    let deltas: Vec<f64> = grid(0.01, 1.0, 99).collect();
    let mut ok = true;
    for &d in &deltas {
        for w in eps.windows(2) {
            let a = asymptotic_bounds(CovertBudget::new(w[0], d)?);
            let b = asymptotic_bounds(CovertBudget::new(w[1], d)?);
            ok &= b.lower > a.lower && b.upper > a.upper;
        }
    }
    for &e in &eps {
        for w in deltas.windows(2) {
            let a = asymptotic_bounds(CovertBudget::new(e, w[0])?);
            let b = asymptotic_bounds(CovertBudget::new(e, w[1])?);
            ok &= b.lower > a.lower && b.upper > a.upper;
        }
    }
    Ok((ok, format!("{} x {} grid", eps.len(), deltas.len())))
}

fn scaling_consistency(_: &Ctx) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for n in [4096u64, 1 << 16, 1_000_000, 1 << 30] {
        for (eps, delta) in [(0.5, 0.01), (0.9, 0.1), (0.3, 1.0)] {
            for sigma in [0.5, 1.0, 3.0] {
                let budget = CovertBudget::new(eps, delta)?;
                let ch = ChannelParams::new(sigma)?;
                let s = match ScalingParams::evaluate(n, budget, ch) {
                    Ok(s) => s,
                    Err(_) => continue,
                };
                let back = s.delta_prime * (1.0 - eps) / (1.0 - s.epsilon_prime);
                let var = ch.variance();
                let power_id = s.power * s.power * n as f64 / (4.0 * var * var);
                worst = worst
                    .max((back / delta - 1.0).abs())
                    .max((power_id / s.delta_prime - 1.0).abs());
            }
        }
    }
    Ok((worst < 1e-14, format!("max rel err {worst:e}")))
}

fn capacity_below_linear(_: &Ctx) -> Result<(bool, String)> {
    let mut ok = true;
    for sigma in [0.3, 1.0, 4.0] {
        let ch = ChannelParams::new(sigma)?;
        for i in 0..=400 {
            let rho = if i == 0 {
                0.0
            } else {
                10f64.powf(-8.0 + i as f64 * 0.025)
            };
            ok &= gaussian_capacity_bound(rho, ch)? <= rho / (2.0 * ch.variance());
        }
    }
    Ok((ok, "401 powers x 3 noise levels".into()))
}

fn capacity_square_root_offset(_: &Ctx) -> Result<(bool, String)> {
    let delta: f64 = 0.01;
    let mut worst: f64 = 0.0;
    for n in [1_000u64, 10_000, 100_000, 1_000_000] {
        let nf = n as f64;
        let rho = 2.0 * (delta / nf).sqrt();
        let diff = nf * gaussian_capacity_bound(rho, unit())? - (delta * nf).sqrt();
        worst = worst.max(diff.abs());
    }
    Ok((worst < delta, format!("max |n C - sqrt(delta n)| = {worst:e}")))
}

fn zero_augmentation_ratio(ctx: &Ctx) -> Result<(bool, String)> {
    let mut ok = true;
    for (n, eps, m) in [(1024u64, 0.5, 64u64), (4096, 0.5, 10), (4096, 0.9, 7), (256, 0.6, 33)] {
        let budget = CovertBudget::new(eps, 0.05)?;
        let (cb, s) = build_lemma_code(n, budget, unit(), 2, Seed(ctx.seed), LemmaOptions::with_messages(m))?;
        let zeros = cb.zero_message_count() as f64;
        let base = (cb.num_messages() - cb.zero_message_count()) as f64;
        let ratio = zeros / base;
        ok &= ratio == s.zero_codewords(m) as f64 / m as f64 && ratio <= s.alpha;
    }
    Ok((ok, "4 constructions".into()))
}

fn power_identity(ctx: &Ctx) -> Result<(bool, String)> {
    let mut ok = true;
    for p in [1e-4, 0.0163, 0.5, 2.0] {
        let cb = generate_bpsk_codebook(32, 5, 3, p, Seed(ctx.seed))?;
        ok &= cb.average_power() == cb.amplitude() * cb.amplitude();
        let mut energy = 0.0;
        for k in 0..cb.num_keys() {
            for w in 0..cb.num_messages() {
                energy += cb.codeword(w, k).iter().map(|x| x * x).sum::<f64>();
            }
        }
        let empirical = energy / (cb.n() * cb.num_messages() * cb.num_keys()) as f64;
        ok &= (empirical / cb.average_power() - 1.0).abs() < 1e-14;
    }
    Ok((ok, "4 powers".into()))
}

fn codebook_determinism(ctx: &Ctx) -> Result<(bool, String)> {
    let a = generate_bpsk_codebook(100, 17, 3, 0.2, Seed(ctx.seed))?;
    let b = generate_bpsk_codebook(100, 17, 3, 0.2, Seed(ctx.seed))?;
    let c = generate_bpsk_codebook(100, 17, 3, 0.2, Seed(ctx.seed ^ 1))?;
    let round = Codebook::from_bytes(&a.to_bytes()?)?;
    Ok((
        a == b && a != c && a == round,
        "same seed equal, other seed differs".into(),
    ))
}

fn augmentation_preserves_base(ctx: &Ctx) -> Result<(bool, String)> {
    let base = generate_bpsk_codebook(40, 9, 2, 0.3, Seed(ctx.seed))?;
    let aug = base.augment_with_zero_codewords(4)?;
    let mut ok = aug.base_code() == base;
    for k in 0..2 {
        for w in 0..9 {
            ok &= aug
                .codeword(w, k)
                .iter()
                .zip(base.codeword(w, k).iter())
                .all(|(a, b)| a.to_bits() == b.to_bits());
        }
        for w in 9..13 {
            ok &= aug.codeword(w, k).iter().all(|&x| x == 0.0);
        }
    }
    Ok((ok, "9 base + 4 zero messages, 2 keys".into()))
}

fn negated(cb: &Codebook) -> Result<Codebook> {
    let by_key: Vec<Vec<Vec<f64>>> = (0..cb.num_keys())
        .map(|k| {
            (0..cb.num_messages())
                .map(|w| cb.codeword(w, k).iter().map(|x| -x).collect())
                .collect()
        })
        .collect();
    Codebook::from_codewords(cb.amplitude(), &by_key)
}

fn decoder_sign_symmetry(ctx: &Ctx) -> Result<(bool, String)> {
    let cb = generate_bpsk_codebook(24, 16, 2, 0.4, Seed(ctx.seed))?;
    let flipped = negated(&cb)?;
    let mut rng = stream(Seed(ctx.seed), Domain::Validation, 1, 0);
    let mut noise = GaussianNoise::new(&mut rng);
    let mut ok = true;
    for t in 0..500 {
        let k = t % 2;
        let y: Vec<f64> = cb.codeword(t % 16, k).iter().map(|x| x + noise.sample(1.0)).collect();
        let minus: Vec<f64> = y.iter().map(|v| -v).collect();
        ok &= ml_decode(&cb, k, &y)? == ml_decode(&flipped, k, &minus)?;
    }
    Ok((ok, "500 received blocks".into()))
}

fn threshold_monotonicity(ctx: &Ctx) -> Result<(bool, String)> {
    let cb = generate_bpsk_codebook(32, 8, 1, 0.3, Seed(ctx.seed))?;
    let mut rng = stream(Seed(ctx.seed), Domain::Validation, 2, 0);
    let mut noise = GaussianNoise::new(&mut rng);
    let thresholds: Vec<f64> = grid(-20.0, 20.0, 80).collect();
    let mut ok = true;
    for t in 0..200 {
        let y: Vec<f64> = cb.codeword(t % 8, 0).iter().map(|x| x + noise.sample(1.0)).collect();
        let mut seen_none = false;
        for &th in &thresholds {
            let out = threshold_decode(&cb, 0, &y, th, unit())?;
            if seen_none {
                ok &= out.message.is_none();
            }
            seen_none |= out.message.is_none();
        }
    }
    Ok((ok, "200 blocks x 81 thresholds".into()))
}

fn error_average_over_keys(ctx: &Ctx) -> Result<(bool, String)> {
    let cb = generate_bpsk_codebook(16, 8, 3, 0.5, Seed(ctx.seed))?.augment_with_zero_codewords(2)?;
    let est = estimate_error_probability(&cb, unit(), &ctx.run(3, 3000), Decoder::MaximumLikelihood)?;
    let avg = est.per_key.iter().map(|e| e.mean).sum::<f64>() / est.per_key.len() as f64;
    let gap = (est.overall.mean - avg).abs();
    Ok((
        gap <= 4.0 * f64::EPSILON,
        format!("overall {} vs mean of keys {avg}", est.overall.mean),
    ))
}

fn error_schedule_independence(ctx: &Ctx) -> Result<(bool, String)> {
    let cb = generate_bpsk_codebook(32, 16, 2, 0.3, Seed(ctx.seed))?;
    let run = ctx.run(4, 5000);
    let mut ok = true;
    for decoder in [Decoder::MaximumLikelihood, Decoder::Threshold(1.0)] {
        let par = estimate_error_probability(&cb, unit(), &run.with_execution(Execution::Parallel), decoder)?;
        let seq = estimate_error_probability(&cb, unit(), &run.with_execution(Execution::Sequential), decoder)?;
        ok &= par == seq;
    }
    Ok((ok, "parallel and sequential runs compared".into()))
}

fn fano_chain(ctx: &Ctx) -> Result<(bool, String)> {
    let mut worst = f64::INFINITY;
    let configs = [
        (8usize, 4usize, 2usize, 0.5, 1usize),
        (12, 8, 1, 0.3, 2),
        (6, 16, 2, 1.0, 0),
        (16, 6, 3, 0.2, 3),
        (10, 5, 2, 0.8, 1),
    ];
    for (i, &(n, m, k, p, zeros)) in configs.iter().enumerate() {
        let seed = Seed(ctx.seed.wrapping_add(i as u64));
        let cb = generate_bpsk_codebook(n, m, k, p, seed)?.augment_with_zero_codewords(zeros)?;
        let err = estimate_error_probability(&cb, unit(), &ctx.run(10 + i as u64, 20_000), Decoder::MaximumLikelihood)?;
        let div = estimate_divergences(&cb, unit(), &ctx.run(20 + i as u64, 20_000))?;
        let mi = div.mutual_information;
        let lhs = (cb.num_messages() as f64).ln() * (1.0 - err.overall.mean) - 1.0;
        let combined =
            (mi.std_error.powi(2) + ((cb.num_messages() as f64).ln() * err.overall.std_error).powi(2)).sqrt();
        let cap = n as f64 * 0.5 * (cb.average_power() / unit().variance()).ln_1p();
        worst = worst
            .min(mi.mean + 4.0 * combined - lhs)
            .min(cap + 3.0 * mi.std_error - mi.mean);
    }
    Ok((worst >= 0.0, format!("min slack {worst:.4}")))
}

fn kl_decomposition(ctx: &Ctx) -> Result<(bool, String)> {
    let cb = generate_bpsk_codebook(20, 8, 2, 0.2, Seed(ctx.seed))?.augment_with_zero_codewords(3)?;
    let d = estimate_divergences(&cb, unit(), &ctx.run(5, 20_000))?;
    let sum = d.code_vs_iid.mean + d.iid_vs_noise.mean;
    let se = (d.code_vs_iid.std_error.powi(2) + d.iid_vs_noise.std_error.powi(2)).sqrt();
    let gap = (d.code_vs_noise.mean - sum).abs();
    Ok((gap <= se + 1e-12, format!("|D - (D1 + E)| = {gap:e}, se {se:e}")))
}

fn ln_cosh_inequalities(_: &Ctx) -> Result<(bool, String)> {
    let mut ok = true;
    let points = 40_001;
    for x in grid(-20.0, 20.0, points - 1) {
        let v = ln_cosh(x);
        let x2 = x * x;
        let slack = 1e-15 * (1.0 + v.abs());
        ok &= v <= x2 / 2.0 + slack;
        ok &= v <= x2 / 2.0 - x2 * x2 / 12.0 + x2 * x2 * x2 / 45.0 + slack;
    }
    Ok((ok, format!("{points} points on [-20, 20]")))
}

fn offset_bound_dominance(_: &Ctx) -> Result<(bool, String)> {
    let mut ok = true;
    let mut worst_rel: f64 = 0.0;
    for r in [0.01, 0.05, 0.1, 0.3] {
        let n = 100;
        let b = covert_offset_bound(n, r, unit())?;
        let exact = n as f64 * per_letter_kl_quadrature(r, unit())?;
        ok &= b.raw_form >= exact;
        worst_rel = worst_rel.max((b.raw_form / b.polynomial_form - 1.0).abs());
    }
    ok &= worst_rel < 1e-12;
    Ok((ok, format!("forms agree to {worst_rel:e}")))
}

fn divergence_nonnegativity(ctx: &Ctx) -> Result<(bool, String)> {
    let mut ok = true;
    for (i, (n, m, k, p, z)) in [
        (1usize, 1usize, 1usize, 0.05, 0usize),
        (4, 2, 2, 0.01, 1),
        (32, 16, 2, 0.02, 5),
    ]
    .into_iter()
    .enumerate()
    {
        let cb = generate_bpsk_codebook(n, m, k, p, Seed(ctx.seed))?.augment_with_zero_codewords(z)?;
        let d = estimate_divergences(&cb, unit(), &ctx.run(30 + i as u64, 10_000))?;
        for e in [d.code_vs_noise, d.code_vs_iid, d.mutual_information] {
            ok &= e.mean >= -3.0 * e.std_error;
        }
    }
    Ok((ok, "3 codes x 3 divergences".into()))
}

fn log_density_stability(ctx: &Ctx) -> Result<(bool, String)> {
    let cb = generate_bpsk_codebook(8, 4, 2, 0.5, Seed(ctx.seed))?.augment_with_zero_codewords(1)?;
    let mut ok = true;
    for sigma in [0.01, 1.0, 50.0] {
        let ch = ChannelParams::new(sigma)?;
        for scale in [0.0, 1.0, 100.0, 1000.0] {
            for sign in [1.0, -1.0] {
                let y: Vec<f64> = (0..8)
                    .map(|i| sign * scale * sigma * if i % 3 == 0 { -1.0 } else { 1.0 })
                    .collect();
                let t = log_densities(&y, &cb, ch)?;
                ok &= t.log_noise.is_finite() && t.log_iid_bpsk.is_finite() && t.log_code_mixture.is_finite();
            }
        }
    }
    Ok((ok, "outputs up to 1000 sigma".into()))
}

fn u_sign_symmetry(ctx: &Ctx) -> Result<(bool, String)> {
    let p = 0.04;
    let run = ctx.run(6, 100_000);
    let a = u_samples(p, unit(), &run, true)?;
    let b = u_samples(p, unit(), &run, false)?;
    let d = ks_statistic(&a, &b);
    let crit = ks_critical_99(a.len(), b.len());
    Ok((d < crit, format!("KS {d:.5} vs critical {crit:.5}")))
}

fn cumulant_consistency(ctx: &Ctx) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for (n, p) in [(256u64, 0.0137), (4096, 0.0038), (1_000_000, 2.7e-4)] {
        let f = |l: f64| u_log_mgf(l, n, p, unit());
        let h1 = 1e-6 * mgf_safe_radius(n, p, unit()).min(1.0);
        let first = (f(h1)? - f(-h1)?) / (2.0 * h1);
        let var_v = (n as f64).sqrt() * u_statistics(p, unit())?.variance;
        let h2 = 1e-4 * mgf_safe_radius(n, p, unit()).min(1.0);
        let second = (f(h2)? - 2.0 * f(0.0)? + f(-h2)?) / (h2 * h2);
        worst = worst.max((first / var_v).abs()).max((second / var_v - 1.0).abs());
    }
    Ok((
        worst <= ctx.cumulant_tolerance,
        format!("max rel err {worst:e}, tolerance {:e}", ctx.cumulant_tolerance),
    ))
}

fn markov_dominates_empirical(ctx: &Ctx) -> Result<(bool, String)> {
    let budget = CovertBudget::new(0.5, 0.01)?;
    let mut worst = f64::INFINITY;
    for (i, n) in [256u64, 1024, 4096].into_iter().enumerate() {
        let s = ScalingParams::evaluate(n, budget, unit())?;
        let ev = tail_events(n, s.power, unit(), &ctx.run(40 + i as u64, 4000), NoiseKind::Gaussian)?;
        let t = (n as f64).powf(2.0 / 3.0);
        let expectation = n as f64 * u_statistics(s.power, unit())?.variance;
        let bound = markov_probability_bound(expectation, t)?;
        let p = ev.two_sided;
        worst = worst.min(bound + 3.0 * p.std_error - p.mean);
    }
    Ok((worst >= 0.0, format!("min slack {worst:.4}")))
}

fn mgf_finite_near_origin(_: &Ctx) -> Result<(bool, String)> {
    let mut ok = true;
    for (n, p, sigma) in [
        (256u64, 0.5, 1.0),
        (4096, 0.0038, 1.0),
        (100, 0.1, 1.5),
        (1 << 20, 1e-3, 0.2),
    ] {
        let ch = ChannelParams::new(sigma)?;
        let r = mgf_safe_radius(n, p, ch);
        let pts: Vec<f64> = grid(-r, r, 200)
            .map(|l| u_log_mgf(l, n, p, ch))
            .collect::<Result<_>>()?;
        ok &= pts.iter().all(|v| v.is_finite());
        // discrete convexity stands in for smoothness
        ok &= pts
            .windows(3)
            .all(|w| w[0] + w[2] - 2.0 * w[1] >= -1e-12 * (1.0 + w[1].abs()));
    }
    Ok((ok, "201 points per configuration".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes() {
        let results = run_suite(SuiteOptions {
            seed: 7,
            corrupt_tolerance: false,
        });
        let failed: Vec<_> = results.iter().filter(|c| !c.passed).collect();
        assert!(failed.is_empty(), "{failed:#?}");
        assert_eq!(results.len(), check_names().count());
    }

    #[test]
    fn corruption_fails_named_check() {
        let ctx = Ctx {
            seed: 1,
            cumulant_tolerance: 0.0,
        };
        assert!(!cumulant_consistency(&ctx).unwrap().0);
    }
}
