//! Commands behind the `covert` binary.
//!
//! Every command is a plain function returning its output so the binary, the
//! integration tests and the acceptance suite all drive the same code.

use std::fmt::{self, Write as _};

use anyhow::{Context, Result};
use covert_core::channel::{estimate_error_probability, Decoder, ErrorEstimate};
use covert_core::checks::{run_suite, Check, SuiteOptions};
use covert_core::codebook::{build_lemma_code, LemmaOptions};
use covert_core::covertness::estimate_divergences;
use covert_core::mc::{EstimateWithError, McRun};
use covert_core::params::{bound_curve, epsilon_grid, ChannelParams, CovertBudget};
use covert_core::rng::Seed;

pub const MAX_BLOCKLENGTH: u64 = 1 << 16;
pub const MAX_COMPONENTS: u64 = 1 << 20;
pub const MAX_TRIALS: u64 = 100_000_000;

pub const BOUNDS_HEADER: &str = "epsilon,delta,lower_nats,upper_nats";
pub const SIMULATE_HEADER: &str = "quantity,value,std_error,samples";

/// Input the user can fix by changing flags; maps to exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Errors from the library that stem from the requested configuration.
fn config_error(e: covert_core::Error) -> anyhow::Error {
    use covert_core::Error as E;
    match e {
        E::Domain { .. }
        | E::NotInRegime { .. }
        | E::DegenerateSize { .. }
        | E::InfeasibleSize { .. }
        | E::Capacity(_)
        | E::MixtureTooLarge { .. }
        | E::NoSamples(_) => usage(e.to_string()),
        other => anyhow::Error::new(other),
    }
}

/// Exit status for an error returned by any command.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        2
    } else {
        3
    }
}

/// Shortest decimal that reads back to the same `f64`; no locale involved.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

/// CSV rows for every `(ε, δ)` pair, δ-major in the order given.
pub fn bounds_csv(deltas: &[f64], eps_min: f64, eps_max: f64, eps_step: f64) -> Result<String> {
    if deltas.is_empty() {
        return Err(usage("at least one --delta value is required"));
    }
    let grid = epsilon_grid(eps_min, eps_max, eps_step).map_err(|e| usage(format!("invalid epsilon grid: {e}")))?;
    let mut out = String::with_capacity(64 * grid.len() * deltas.len());
    out.push_str(BOUNDS_HEADER);
    out.push('\n');
    for &delta in deltas {
        let curve = bound_curve(delta, &grid).map_err(|e| usage(format!("invalid delta {delta}: {e}")))?;
        for p in &curve.points {
            writeln!(
                out,
                "{},{},{},{}",
                fmt_f64(p.epsilon),
                fmt_f64(delta),
                fmt_f64(p.lower),
                fmt_f64(p.upper)
            )?;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecoderChoice {
    #[default]
    MaximumLikelihood,
    Threshold,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateConfig {
    pub n: u64,
    pub epsilon: f64,
    pub delta: f64,
    pub sigma: f64,
    /// Base message count; `None` uses the size target of the construction.
    pub messages: Option<u64>,
    pub keys: u64,
    pub trials: u64,
    pub samples: u64,
    pub seed: u64,
    pub decoder: DecoderChoice,
}

impl SimulateConfig {
    fn check_caps(&self) -> Result<()> {
        if self.n > MAX_BLOCKLENGTH {
            return Err(usage(format!("n = {} exceeds the cap of {MAX_BLOCKLENGTH}", self.n)));
        }
        if self.keys == 0 {
            return Err(usage("--keys must be at least 1"));
        }
        for (name, v) in [("trials", self.trials), ("samples", self.samples)] {
            if v == 0 || v > MAX_TRIALS {
                return Err(usage(format!("--{name} must lie in 1..={MAX_TRIALS}, got {v}")));
            }
        }
        if self.trials < self.keys {
            return Err(usage("--trials must be at least --keys"));
        }
        Ok(())
    }
}

/// A measurement checked against a budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetCheck {
    pub measured: EstimateWithError,
    pub budget: f64,
}

impl BudgetCheck {
    /// Passes when the measurement is within 3 standard errors below the budget.
    pub fn passed(&self) -> bool {
        self.measured.mean <= self.budget + 3.0 * self.measured.std_error
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateReport {
    pub config: SimulateConfig,
    pub base_messages: u64,
    pub zero_messages: u64,
    pub power: f64,
    pub alpha: f64,
    pub threshold: Option<f64>,
    pub error_base: ErrorEstimate,
    pub error_augmented: ErrorEstimate,
    pub kl_base: EstimateWithError,
    pub kl_augmented: EstimateWithError,
    pub reliability: BudgetCheck,
    pub covertness: BudgetCheck,
}

impl SimulateReport {
    /// `⌊αM⌋ / M`, the zero-codeword ratio actually used.
    pub fn realized_alpha(&self) -> f64 {
        self.zero_messages as f64 / self.base_messages as f64
    }

    pub fn passed(&self) -> bool {
        self.reliability.passed() && self.covertness.passed()
    }

    /// Machine-readable report; the row set depends only on the number of keys.
    pub fn to_csv(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        out.push_str(SIMULATE_HEADER);
        out.push('\n');
        let mut exact = |name: &str, v: String| {
            out.push_str(name);
            out.push(',');
            out.push_str(&v);
            out.push_str(",,\n");
        };
        exact("n", c.n.to_string());
        exact("epsilon", fmt_f64(c.epsilon));
        exact("delta", fmt_f64(c.delta));
        exact("sigma", fmt_f64(c.sigma));
        exact("base_messages", self.base_messages.to_string());
        exact("zero_messages", self.zero_messages.to_string());
        exact("keys", c.keys.to_string());
        exact("seed", c.seed.to_string());
        exact("symbol_power", fmt_f64(self.power));
        exact("alpha_target", fmt_f64(self.alpha));
        exact("alpha_realized", fmt_f64(self.realized_alpha()));
        exact("threshold", self.threshold.map(fmt_f64).unwrap_or_default());
        let mut measured = |name: &str, e: &EstimateWithError| {
            let _ = writeln!(out, "{name},{},{},{}", fmt_f64(e.mean), fmt_f64(e.std_error), e.samples);
        };
        measured("error_base", &self.error_base.overall);
        for (k, e) in self.error_base.per_key.iter().enumerate() {
            measured(&format!("error_base_key_{k}"), e);
        }
        measured("error_augmented", &self.error_augmented.overall);
        for (k, e) in self.error_augmented.per_key.iter().enumerate() {
            measured(&format!("error_augmented_key_{k}"), e);
        }
        measured("kl_base", &self.kl_base);
        measured("kl_augmented", &self.kl_augmented);
        let _ = writeln!(out, "reliability_pass,{},,", u8::from(self.reliability.passed()));
        let _ = writeln!(out, "covertness_pass,{},,", u8::from(self.covertness.passed()));
        out
    }

    /// Human-readable summary.
    pub fn summary(&self) -> String {
        let c = &self.config;
        let pm = |e: &EstimateWithError| format!("{:.6} ± {:.6}", e.mean, e.std_error);
        let verdict = |b: &BudgetCheck| if b.passed() { "PASS" } else { "FAIL" };
        let mut s = String::new();
        let _ = writeln!(
            s,
            "code: n={} M={}+{} zero K={} P={:.6e} alpha={:.4} (realized {:.4})",
            c.n,
            self.base_messages,
            self.zero_messages,
            c.keys,
            self.power,
            self.alpha,
            self.realized_alpha()
        );
        let _ = writeln!(
            s,
            "error base      {} ({} trials)",
            pm(&self.error_base.overall),
            c.trials
        );
        let _ = writeln!(
            s,
            "error augmented {} ({} trials)",
            pm(&self.error_augmented.overall),
            c.trials
        );
        for (k, e) in self.error_augmented.per_key.iter().enumerate() {
            let _ = writeln!(s, "  key {k}: {}", pm(e));
        }
        let _ = writeln!(s, "KL base         {} ({} samples)", pm(&self.kl_base), c.samples);
        let _ = writeln!(s, "KL augmented    {} ({} samples)", pm(&self.kl_augmented), c.samples);
        let _ = writeln!(
            s,
            "reliability {}: {:.6} vs epsilon {}",
            verdict(&self.reliability),
            self.reliability.measured.mean,
            c.epsilon
        );
        let _ = writeln!(
            s,
            "covertness {}: {:.6} vs delta {}",
            verdict(&self.covertness),
            self.covertness.measured.mean,
            c.delta
        );
        s
    }
}

/// Builds the zero-augmented code and measures it against both budgets.
pub fn simulate(config: &SimulateConfig) -> Result<SimulateReport> {
    config.check_caps()?;
    let budget = CovertBudget::new(config.epsilon, config.delta).map_err(config_error)?;
    let channel = ChannelParams::new(config.sigma).map_err(config_error)?;
    let keys = usize::try_from(config.keys).map_err(|_| usage("--keys too large"))?;
    let options = match config.messages {
        Some(m) => LemmaOptions::with_messages(m),
        None => LemmaOptions::default(),
    };
    if let Some(m) = config.messages {
        if m == 0 {
            return Err(usage("--messages must be at least 1"));
        }
        // M_total >= M, so refuse before generating anything
        if m.saturating_mul(config.keys) > MAX_COMPONENTS {
            return Err(usage(format!(
                "M * K = {} exceeds the cap of {MAX_COMPONENTS}",
                m.saturating_mul(config.keys)
            )));
        }
    }
    let (code, params) =
        build_lemma_code(config.n, budget, channel, keys, Seed(config.seed), options).map_err(config_error)?;
    let components = code.num_messages() as u64 * config.keys;
    if components > MAX_COMPONENTS {
        return Err(usage(format!(
            "M_total * K = {components} exceeds the cap of {MAX_COMPONENTS}"
        )));
    }
    let base = code.base_code();
    let base_messages = base.num_messages() as u64;
    let (decoder, threshold) = match config.decoder {
        DecoderChoice::MaximumLikelihood => (Decoder::MaximumLikelihood, None),
        DecoderChoice::Threshold => {
            let t = params.decoding_threshold(base_messages);
            (Decoder::Threshold(t), Some(t))
        }
    };

    let trials = McRun::new(config.trials, config.seed);
    let samples = McRun::new(config.samples, config.seed);
    let error_base = estimate_error_probability(&base, channel, &trials, decoder).context("base error estimate")?;
    let error_augmented =
        estimate_error_probability(&code, channel, &trials, decoder).context("augmented error estimate")?;
    let kl_base = estimate_divergences(&base, channel, &samples)
        .map_err(config_error)?
        .code_vs_noise;
    let kl_augmented = estimate_divergences(&code, channel, &samples)
        .map_err(config_error)?
        .code_vs_noise;

    Ok(SimulateReport {
        config: config.clone(),
        base_messages,
        zero_messages: code.zero_message_count() as u64,
        power: params.power,
        alpha: params.alpha,
        threshold,
        reliability: BudgetCheck {
            measured: error_augmented.overall,
            budget: config.epsilon,
        },
        covertness: BudgetCheck {
            measured: kl_augmented,
            budget: config.delta,
        },
        error_base,
        error_augmented,
        kl_base,
        kl_augmented,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidateReport {
    pub checks: Vec<Check>,
}

impl ValidateReport {
    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn passed(&self) -> bool {
        self.failed().next().is_none()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let _ = writeln!(s, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        let failed: Vec<&str> = self.failed().map(|c| c.name).collect();
        let _ = writeln!(
            s,
            "checks run: {}, passed: {}, failed: {}",
            self.checks.len(),
            self.checks.len() - failed.len(),
            failed.len()
        );
        if !failed.is_empty() {
            let _ = writeln!(s, "failed checks: {}", failed.join(", "));
        }
        s
    }
}

pub fn validate(seed: u64, corrupt_tolerance: bool) -> ValidateReport {
    ValidateReport {
        checks: run_suite(SuiteOptions {
            seed,
            corrupt_tolerance,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for x in [0.1 / 0.5f64.sqrt(), 0.2, 1e-300, 123456.789, 0.01] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(0.5), "0.5");
    }

    #[test]
    fn bounds_rows() {
        let csv = bounds_csv(&[0.1, 0.01], 0.01, 0.99, 0.01).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], BOUNDS_HEADER);
        assert_eq!(lines.len(), 199);
        assert!(lines.contains(&"0.5,0.01,0.1414213562373095,0.2"));
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn bad_grid_is_usage_error() {
        let e = bounds_csv(&[0.1], 0.5, 0.2, 0.1).unwrap_err();
        assert_eq!(exit_code(&e), 2);
        let e = bounds_csv(&[], 0.1, 0.2, 0.1).unwrap_err();
        assert_eq!(exit_code(&e), 2);
    }
}
