use covert_core::channel::{estimate_error_probability, Decoder};
use covert_core::codebook::{build_lemma_code, generate_bpsk_codebook, Codebook, LemmaOptions};
use covert_core::covertness::{estimate_divergences, per_letter_kl_quadrature};
use covert_core::deviation::{
    empirical_tail_probability, empirical_tail_probability_with, sample_u_moments, u_statistics,
};
use covert_core::mc::{Execution, McRun};
use covert_core::params::{ChannelParams, CovertBudget, ScalingParams};
use covert_core::rng::{NoiseKind, Seed};

fn unit() -> ChannelParams {
    ChannelParams::new(1.0).unwrap()
}

#[test]
fn one_symbol_code_matches_quadrature() {
    // n = 1, both BPSK symbols present with equal weight: the output law is the
    // i.i.d. BPSK law itself
    let p: f64 = 0.25;
    let a = p.sqrt();
    let cb = Codebook::from_codewords(a, &[vec![vec![a], vec![-a]]]).unwrap();
    let d = estimate_divergences(&cb, unit(), &McRun::new(100_000, 3)).unwrap();
    let exact = per_letter_kl_quadrature(p, unit()).unwrap();
    assert!(d.code_vs_noise.within(exact, 3.0), "{:?} vs {exact}", d.code_vs_noise);
    assert!(d.code_vs_iid.mean.abs() < 1e-15);
}

#[test]
fn single_message_threshold_acceptance() {
    let n = 4096;
    let s = ScalingParams::evaluate(n, CovertBudget::new(0.5, 0.01).unwrap(), unit()).unwrap();
    let cb = generate_bpsk_codebook(n as usize, 1, 1, s.power, Seed(11)).unwrap();
    let threshold = s.decoding_threshold(1);
    let e = estimate_error_probability(&cb, unit(), &McRun::new(20_000, 5), Decoder::Threshold(threshold)).unwrap();
    assert!(1.0 - e.overall.mean >= 1.0 - s.epsilon_prime / 2.0, "{:?}", e.overall);
}

#[test]
fn huge_threshold_rejects_everything() {
    let cb = generate_bpsk_codebook(16, 4, 1, 1.0, Seed(1)).unwrap();
    let e = estimate_error_probability(&cb, unit(), &McRun::new(500, 5), Decoder::Threshold(1e300)).unwrap();
    assert_eq!(e.overall.mean, 1.0);
}

#[test]
fn tail_probability_respects_finite_n_bound() {
    let budget = CovertBudget::new(0.5, 0.01).unwrap();
    let n = 4096;
    let s = ScalingParams::evaluate(n, budget, unit()).unwrap();
    let e = empirical_tail_probability(n, s.power, unit(), &McRun::new(20_000, 9)).unwrap();
    assert!(e.mean <= 0.25 * s.epsilon_prime + 3.0 * e.std_error, "{e:?}");
}

#[test]
fn tail_probability_shrinks_with_n() {
    let budget = CovertBudget::new(0.5, 0.01).unwrap();
    let est = |n: u64| {
        let s = ScalingParams::evaluate(n, budget, unit()).unwrap();
        empirical_tail_probability(n, s.power, unit(), &McRun::new(20_000, 2)).unwrap()
    };
    let (small, large) = (est(256), est(4096));
    let se = (small.std_error.powi(2) + large.std_error.powi(2)).sqrt();
    assert!(large.mean <= small.mean + 3.0 * se, "{small:?} {large:?}");
}

#[test]
fn tail_without_noise_is_zero() {
    let e = empirical_tail_probability_with(4096, 0.0038, unit(), &McRun::new(1000, 1), NoiseKind::Zero).unwrap();
    assert_eq!(e.mean, 0.0);
}

#[test]
fn u_moments_match_closed_form() {
    for (i, r) in [0.01, 0.1].into_iter().enumerate() {
        let exact = u_statistics(r, unit()).unwrap();
        for positive in [true, false] {
            let m = sample_u_moments(r, unit(), &McRun::new(400_000, i as u64), positive).unwrap();
            assert!(m.mean.within(exact.mean, 3.0), "{r} {:?} vs {}", m.mean, exact.mean);
            assert!(
                m.variance.within(exact.variance, 3.0),
                "{r} {:?} vs {}",
                m.variance,
                exact.variance
            );
        }
    }
}

#[test]
fn lemma_pipeline_is_schedule_free() {
    let budget = CovertBudget::new(0.5, 0.05).unwrap();
    let (cb, s) = build_lemma_code(256, budget, unit(), 2, Seed(4), LemmaOptions::with_messages(16)).unwrap();
    assert_eq!(cb.zero_message_count() as u64, s.zero_codewords(16));
    let run = McRun::new(3000, 8);
    let seq = run.with_execution(Execution::Sequential);
    let par = run.with_execution(Execution::Parallel);
    assert_eq!(
        estimate_divergences(&cb, unit(), &seq).unwrap(),
        estimate_divergences(&cb, unit(), &par).unwrap()
    );
    for decoder in [Decoder::MaximumLikelihood, Decoder::Threshold(s.decoding_threshold(16))] {
        assert_eq!(
            estimate_error_probability(&cb, unit(), &seq, decoder).unwrap(),
            estimate_error_probability(&cb, unit(), &par, decoder).unwrap()
        );
    }
}
